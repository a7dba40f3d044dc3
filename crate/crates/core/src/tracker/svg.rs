use std::fmt::Write as _;

use super::run::FrontKind;
use super::solution::FrontSolution;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// x–t diagram: `x` horizontal, `t` upward; families colour-coded, non-physical fronts dashed.
pub fn render_svg(sol: &FrontSolution) -> String {
    let (w, h, pad) = (640.0, 640.0, 40.0);
    let (t0, t1) = sol.t_span;
    let (x0, x1) = sol.x_span;
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |t: f64| h - pad - (t - t0) / (t1 - t0) * (h - 2.0 * pad);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
        pad,
        pad,
        w - 2.0 * pad,
        h - 2.0 * pad
    )
    .unwrap();
    for p in &sol.pieces[1..] {
        let x = px(p.axes.x_lo);
        writeln!(s, r##"<line x1="{x:.2}" y1="{pad}" x2="{x:.2}" y2="{}" stroke="#999" stroke-dasharray="2,4"/>"##, h - pad).unwrap();
    }
    for seg in sol.segments() {
        let (color, dash) = match seg.kind {
            FrontKind::Physical { family, .. } => (PALETTE[family % PALETTE.len()], ""),
            FrontKind::NonPhysical => ("#555", r#" stroke-dasharray="4,3""#),
        };
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1"{dash}/>"#,
            px(seg.x0),
            py(seg.t0),
            px(seg.x1),
            py(seg.t1)
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" font-size="12">x</text>"#, w - pad, h - pad / 3.0).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" font-size="12">t</text>"#, pad / 3.0, pad).unwrap();
    s.push_str("</svg>\n");
    s
}
