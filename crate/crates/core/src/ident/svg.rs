use super::CmcCurve;
use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Line plot of the curve: mean, shaded 95% interval, one thin line per
/// repetition, axes with ticks and a legend.
pub fn cmc_svg(curve: &CmcCurve, title: &str) -> String {
    let ranks = curve.ranks();
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let x = |k: usize| LEFT + if ranks > 1 { (k - 1) as f64 / (ranks - 1) as f64 * pw } else { pw / 2.0 };
    let y = |v: f64| TOP + (1.0 - v.clamp(0.0, 1.0)) * ph;
    let path = |vals: &[f64]| {
        vals.iter()
            .enumerate()
            .map(|(i, &v)| format!("{}{:.2},{:.2}", if i == 0 { 'M' } else { 'L' }, x(i + 1), y(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="14" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));

    let mut band = String::new();
    for k in 1..=ranks {
        let _ = write!(band, "{}{:.2},{:.2} ", if k == 1 { 'M' } else { 'L' }, x(k), y(curve.ci_high[k - 1]));
    }
    for k in (1..=ranks).rev() {
        let _ = write!(band, "L{:.2},{:.2} ", x(k), y(curve.ci_low[k - 1]));
    }
    let _ = writeln!(s, r##"<path d="{}Z" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##, band);
    for rep in &curve.repetitions {
        let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#999" stroke-width="0.8"/>"##, path(rep));
    }
    let _ = writeln!(s, r##"<path d="{}" fill="none" stroke="#1f77b4" stroke-width="2"/>"##, path(&curve.mean));

    let (x0, y0) = (LEFT, TOP + ph);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, LEFT + pw);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{:.2}" x2="{x0}" y2="{:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            x0 - 4.0,
            y(v),
            y(v),
            x0 - 6.0,
            y(v) + 4.0
        );
    }
    let step = ranks.div_ceil(10).max(1);
    for k in (1..=ranks).filter(|k| (k - 1) % step == 0 || *k == ranks) {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y0}" x2="{:.2}" y2="{}" stroke="black"/><text x="{:.2}" y="{}" text-anchor="middle">{k}</text>"#,
            x(k),
            x(k),
            y0 + 4.0,
            x(k),
            y0 + 18.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">Rank</text>"#, LEFT + pw / 2.0, H - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">Identification rate</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let (lx, ly) = (LEFT + pw - 170.0, y0 - 60.0);
    let _ = writeln!(s, r#"<rect x="{lx}" y="{ly}" width="165" height="54" fill="white" stroke="black"/>"#);
    let entries = [
        (r##"stroke="#1f77b4" stroke-width="2""##, "mean"),
        (r##"stroke="#1f77b4" stroke-opacity="0.3" stroke-width="8""##, "95% interval"),
        (r##"stroke="#999" stroke-width="0.8""##, "repetitions"),
    ];
    for (i, (style, label)) in entries.iter().enumerate() {
        let yy = ly + 14.0 + 15.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}" {style}/><text x="{}" y="{}">{label}</text>"#,
            lx + 8.0,
            lx + 32.0,
            lx + 40.0,
            yy + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
