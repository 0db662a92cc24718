//! Plain SVG/CSV renderings of the GDS map and progression curves.

use std::fmt::Write;

use crate::error::Result;
use crate::gds::GdsModel;
use crate::progression::ProgressionTrace;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut f = Frame {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            f.x0 = f.x0.min(x);
            f.x1 = f.x1.max(x);
            f.y0 = f.y0.min(y);
            f.y1 = f.y1.max(y);
        }
        if !f.x0.is_finite() {
            (f.x0, f.x1, f.y0, f.y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if f.x1 - f.x0 < 1e-12 {
            (f.x0, f.x1) = (f.x0 - 0.5, f.x1 + 0.5);
        }
        if f.y1 - f.y0 < 1e-12 {
            (f.y0, f.y1) = (f.y0 - 0.5, f.y1 + 0.5);
        }
        f
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (
            PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD),
            H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD),
        )
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
}

fn colour(label: Option<usize>) -> &'static str {
    label.map_or("#cccccc", |l| PALETTE[l % PALETTE.len()])
}

/// 2-D map of the training dialogues coloured by cluster, centroids labelled
/// with their aggregate value, and an optional dialogue path.
pub fn map_svg(model: &GdsModel, path: Option<&[(f64, f64)]>) -> Result<String> {
    let centroids = model.map.project_all(&model.centroids)?;
    let frame = Frame::fit(
        model
            .train_map_points
            .iter()
            .chain(&centroids)
            .chain(path.unwrap_or(&[]))
            .copied(),
    );
    let mut out = String::new();
    header(&mut out, "Global dialogue state map");
    for (&(x, y), label) in model.train_map_points.iter().zip(&model.train_labels) {
        let (px, py) = frame.px(x, y);
        let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{}" fill-opacity="0.6"/>"#, colour(*label));
    }
    if let Some(path) = path.filter(|p| !p.is_empty()) {
        let pts: Vec<String> = path
            .iter()
            .map(|&(x, y)| {
                let (px, py) = frame.px(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, pts.join(" "));
        let (ex, ey) = frame.px(path[path.len() - 1].0, path[path.len() - 1].1);
        let _ = writeln!(out, r#"<circle cx="{ex:.2}" cy="{ey:.2}" r="4" fill="black"/>"#);
    }
    for (j, (&(x, y), v)) in centroids.iter().zip(&model.aggregates).enumerate() {
        let (px, py) = frame.px(x, y);
        let _ = writeln!(
            out,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="7" fill="{}" stroke="black" stroke-width="2"/>"#,
            colour(Some(j))
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-weight="bold">{v:.2}</text>"#,
            px + 9.0,
            py - 9.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Companion rows for `map_svg`: `kind,index,x,y,cluster,value`.
pub fn map_csv(model: &GdsModel, path: Option<&[(f64, f64)]>) -> Result<String> {
    let mut out = String::from("kind,index,x,y,cluster,value\n");
    for (i, ((x, y), l)) in model.train_map_points.iter().zip(&model.train_labels).enumerate() {
        let cluster = l.map_or_else(|| "noise".to_string(), |c| c.to_string());
        let _ = writeln!(out, "point,{i},{x},{y},{cluster},");
    }
    for (j, ((x, y), v)) in model.map.project_all(&model.centroids)?.iter().zip(&model.aggregates).enumerate() {
        let _ = writeln!(out, "centroid,{j},{x},{y},{j},{v}");
    }
    for (t, (x, y)) in path.unwrap_or(&[]).iter().enumerate() {
        let _ = writeln!(out, "path,{},{x},{y},,", t + 1);
    }
    Ok(out)
}

/// PF values per utterance with the least-squares line.
pub fn curve_svg(trace: &ProgressionTrace, title: &str) -> String {
    let n = trace.turn_values.len();
    let fit = |t: f64| trace.intercept + trace.slope * t;
    let frame = Frame::fit(
        trace
            .turn_values
            .iter()
            .enumerate()
            .map(|(i, v)| ((i + 1) as f64, *v))
            .chain([(1.0, fit(1.0)), (n as f64, fit(n as f64))]),
    );
    let mut out = String::new();
    header(&mut out, title);
    let pts: Vec<String> = trace
        .turn_values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (px, py) = frame.px((i + 1) as f64, *v);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, pts.join(" "));
    let (ax, ay) = frame.px(1.0, fit(1.0));
    let (bx, by) = frame.px(n as f64, fit(n as f64));
    let _ = writeln!(
        out,
        r##"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="11">slope {:.4}</text>"#,
        H - 10.0,
        trace.slope
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingMatrix;
    use crate::gds::{fit_gds, ClusterMethod, GdsConfig};

    fn model() -> GdsModel {
        let pts: Vec<EmbeddingMatrix> = (0..12)
            .map(|i| EmbeddingMatrix::new(vec![vec![(i % 3) as f64 * 5.0 + 0.1 * i as f64, 1.0, (i % 2) as f64]]).unwrap())
            .collect();
        let acc: Vec<f64> = (0..12).map(|i| (i % 3) as f64).collect();
        let cfg = GdsConfig {
            method: ClusterMethod::Kmeans { k: 3, n_init: 2 },
            ..GdsConfig::default()
        };
        fit_gds(&cfg, &pts, &acc, 0).unwrap()
    }

    #[test]
    fn map_has_every_point_and_centroid() {
        let m = model();
        let svg = map_svg(&m, Some(&[(0.0, 0.0), (0.5, 0.2)])).unwrap();
        assert_eq!(svg.matches("<circle").count(), 12 + 3 + 1);
        assert_eq!(svg.matches("font-weight=\"bold\"").count(), 3);
        assert!(svg.contains("<polyline"));
        let csv = map_csv(&m, None).unwrap();
        assert_eq!(csv.lines().count(), 1 + 12 + 3);
        assert_eq!(map_svg(&m, None).unwrap(), map_svg(&m, None).unwrap());
    }

    #[test]
    fn curve_has_fit_line() {
        let svg = curve_svg(&ProgressionTrace::from_values(vec![0.1, 0.4, 0.3]), "d0");
        assert!(svg.contains("<line") && svg.contains("slope 0.1000"));
        let flat = curve_svg(&ProgressionTrace::from_values(vec![1.0]), "one");
        assert!(!flat.contains("NaN"));
    }
}
