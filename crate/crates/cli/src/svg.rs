//! Minimal SVG plot of a spatial spectrum in dB.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

pub fn spectrum_svg(theta: &[f64], p_db: &[f64], true_angles: &[f64], estimates: &[f64]) -> String {
    let finite = p_db.iter().copied().filter(|v| v.is_finite());
    let top = finite.clone().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let bottom = finite.fold(f64::INFINITY, f64::min).min(top - 1.0);
    let (top, bottom) = ((top / 10.0).ceil() * 10.0, (bottom / 10.0).floor() * 10.0);

    let x = |deg: f64| MARGIN + (deg + 90.0) / 180.0 * (WIDTH - 2.0 * MARGIN);
    let y =
        |db: f64| MARGIN + (top - db.clamp(bottom, top)) / (top - bottom) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for deg in (-90..=90).step_by(30) {
        let px = x(deg as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.1}" y1="{MARGIN}" x2="{px:.1}" y2="{:.1}" stroke="#ddd"/><text x="{px:.1}" y="{:.1}" text-anchor="middle">{deg}</text>"##,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 16.0
        );
    }
    let step = ((top - bottom) / 5.0 / 10.0).ceil().max(1.0) * 10.0;
    let mut level = top;
    while level >= bottom {
        let py = y(level);
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{level}</text>"##,
            WIDTH - MARGIN,
            MARGIN - 6.0,
            py + 4.0
        );
        level -= step;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    for (deg, colour, dash) in true_angles
        .iter()
        .map(|&a| (a, "#c0392b", "4 3"))
        .chain(estimates.iter().map(|&a| (a, "#27ae60", "1 2")))
    {
        let px = x(deg);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.1}" y1="{MARGIN}" x2="{px:.1}" y2="{:.1}" stroke="{colour}" stroke-dasharray="{dash}"/>"#,
            HEIGHT - MARGIN
        );
    }

    let points: Vec<String> = theta
        .iter()
        .zip(p_db)
        .filter(|(_, v)| v.is_finite())
        .map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points="{}"/>"##,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">angle (deg)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">P (dB)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    s.push_str("</svg>\n");
    s
}
