//! Single-measure histogram: one bar per atom, at its exact location.

use fwv::weights::DiscreteMeasure;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 320.0;
const PAD: f64 = 40.0;

pub fn histogram(mu: &DiscreteMeasure, title: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str(&format!("<title>{}</title>\n", escape(title)));
    out.push_str(&format!(
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>\n",
        y = HEIGHT - PAD,
        x2 = WIDTH - PAD
    ));
    if mu.atoms.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let lo = mu.atoms.first().unwrap().0;
    let hi = mu.atoms.last().unwrap().0;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let top = mu.atoms.iter().map(|a| a.1).fold(0.0, f64::max);
    let top = if top > 0.0 { top } else { 1.0 };
    let x_of = |x: f64| PAD + (x - lo) / span * (WIDTH - 2.0 * PAD);
    let bar = ((WIDTH - 2.0 * PAD) / mu.atoms.len() as f64 * 0.6).clamp(1.0, 12.0);
    for &(x, w) in &mu.atoms {
        let h = w / top * (HEIGHT - 2.0 * PAD);
        out.push_str(&format!(
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{bar:.3}\" height=\"{h:.3}\" fill=\"steelblue\"><title>{} : {}</title></rect>\n",
            x_of(x) - bar / 2.0,
            HEIGHT - PAD - h,
            fwv::weights::fmt12(x),
            fwv::weights::fmt12(w)
        ));
    }
    for (x, anchor) in [(lo, "start"), (hi, "end")] {
        out.push_str(&format!(
            "<text x=\"{:.3}\" y=\"{}\" font-size=\"12\" text-anchor=\"{anchor}\">{}</text>\n",
            x_of(x),
            HEIGHT - PAD / 2.0,
            fwv::weights::fmt12(x)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
