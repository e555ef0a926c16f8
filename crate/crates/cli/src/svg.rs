//! Plain SVG figures: the domain with networks drawn over it, a nodal heat
//! map, and a density chart.

use std::fmt::Write;

use maxshape::audit::DensityProfile;
use maxshape::geometry::{CurveNetwork, DomainSpec, Point2};
use maxshape::grid::Grid;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 16.0;

/// Maps model coordinates to pixels with y pointing up.
struct Frame {
    lo: Point2<f64>,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(domain: &DomainSpec<f64>) -> Self {
        let (lo, hi) = domain.bounding_box();
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Self { lo, scale, height: (hi.y - lo.y) * scale + 2.0 * MARGIN }
    }

    fn width(&self, domain: &DomainSpec<f64>) -> f64 {
        let (lo, hi) = domain.bounding_box();
        (hi.x - lo.x) * self.scale + 2.0 * MARGIN
    }

    fn map(&self, p: Point2<f64>) -> (f64, f64) {
        (MARGIN + (p.x - self.lo.x) * self.scale, self.height - MARGIN - (p.y - self.lo.y) * self.scale)
    }
}

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn outline(out: &mut String, frame: &Frame, domain: &DomainSpec<f64>) {
    let pts: Vec<String> = domain
        .boundary()
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, pts.join(" "));
}

fn network(out: &mut String, frame: &Frame, net: &CurveNetwork<f64>, color: &str, width: f64) {
    for s in net.segments() {
        let (x1, y1) = frame.map(s.a);
        let (x2, y2) = frame.map(s.b);
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{width}" stroke-linecap="round"/>"#
        );
    }
}

/// Ω's outline with each network drawn in its colour, later ones on top.
pub fn domain_figure(domain: &DomainSpec<f64>, nets: &[(&CurveNetwork<f64>, &str)]) -> String {
    let frame = Frame::new(domain);
    let mut out = String::new();
    header(&mut out, frame.width(domain), frame.height);
    outline(&mut out, &frame, domain);
    for (net, color) in nets {
        network(&mut out, &frame, net, color, 2.5);
    }
    out.push_str("</svg>\n");
    out
}

/// Five-stop blue to yellow ramp on `t ∈ [0, 1]`.
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Nodal values as cells of side `h`, zero cells left blank, with Σ on top.
pub fn heat_map(grid: &Grid<f64>, values: &[f64], net: Option<&CurveNetwork<f64>>) -> String {
    let domain = grid.domain();
    let frame = Frame::new(domain);
    let mut out = String::new();
    header(&mut out, frame.width(domain), frame.height);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cell = grid.spacing() * frame.scale;
    if top > 0.0 {
        for (k, v) in values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let (x, y) = frame.map(grid.position(k));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{c:.2}" height="{c:.2}" fill="{}"/>"#,
                x - cell / 2.0,
                y - cell / 2.0,
                ramp(v.abs() / top),
                c = cell + 0.05,
            );
        }
    }
    outline(&mut out, &frame, domain);
    if let Some(net) = net {
        network(&mut out, &frame, net, "crimson", 2.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Density against `r` (log scale), one polyline per base point, with the
/// bounds `c₁` and `c₂` dashed.
pub fn density_chart(profiles: &[DensityProfile], c1: f64, c2: f64) -> String {
    let (w, h) = (SIZE * 1.25, SIZE * 0.75);
    let (left, right, top, bottom) = (56.0, 16.0, 16.0, 40.0);
    let radii = profiles.iter().flat_map(|p| p.radii.iter().copied());
    let (rmin, rmax) = radii.fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r), b.max(r)));
    let dmax = profiles.iter().flat_map(|p| p.densities.iter().copied()).fold(c2, f64::max) * 1.1;
    let mut out = String::new();
    header(&mut out, w, h);
    let y_of = |d: f64| h - bottom - d / dmax * (h - top - bottom);
    let (lx0, lx1) = if rmax > 0.0 && rmin < rmax { (rmin.ln(), rmax.ln()) } else { (-1.0, 1.0) };
    let x_of = |r: f64| left + (r.ln() - lx0) / (lx1 - lx0) * (w - left - right);
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        w - left - right,
        h - top - bottom
    );
    for (c, label) in [(c1, "c1"), (c2, "c2")] {
        let y = y_of(c);
        let _ = writeln!(
            out,
            r#"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            w - right
        );
        let _ = writeln!(out, r#"<text x="4" y="{:.2}" font-size="11" font-family="sans-serif">{label}={c:.3}</text>"#, y + 4.0);
    }
    for p in profiles {
        if p.radii.is_empty() {
            continue;
        }
        let pts: Vec<String> = p
            .radii
            .iter()
            .zip(&p.densities)
            .map(|(&r, &d)| format!("{:.2},{:.2}", x_of(r), y_of(d)))
            .collect();
        let color = if p.pass() { "steelblue" } else { "crimson" };
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, pts.join(" "));
    }
    if rmax > 0.0 {
        let _ = writeln!(
            out,
            r#"<text x="{left}" y="{:.2}" font-size="11" font-family="sans-serif">r = {rmin:.3e}</text>"#,
            h - 12.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif" text-anchor="end">r = {rmax:.3e}</text>"#,
            w - right,
            h - 12.0
        );
    }
    out.push_str("</svg>\n");
    out
}
