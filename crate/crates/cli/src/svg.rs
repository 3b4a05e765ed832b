//! Minimal deterministic SVG plotting.

use std::fmt::Write;

pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Axis-aligned chart area with linear scales.
pub struct Plot {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
    legend: usize,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Plot {
        Plot::build(title, x_label, y_label, x, y, true)
    }

    /// No numeric x ticks; label categories with [`Plot::label`].
    pub fn categorical(
        title: &str,
        x_label: &str,
        y_label: &str,
        x: (f64, f64),
        y: (f64, f64),
    ) -> Plot {
        Plot::build(title, x_label, y_label, x, y, false)
    }

    fn build(
        title: &str,
        x_label: &str,
        y_label: &str,
        x: (f64, f64),
        y: (f64, f64),
        x_ticks: bool,
    ) -> Plot {
        let pad = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let mut p = Plot {
            body: String::new(),
            x: pad(x),
            y: pad(y),
            legend: 0,
        };
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = write!(
            p.body,
            r##"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{}</text>
<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>
<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>
<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>
"##,
            (x0 + x1) / 2.0,
            esc(title),
            x1 - x0,
            y1 - y0,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            esc(x_label),
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            esc(y_label),
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = p.x.0 + f * (p.x.1 - p.x.0);
            let yv = p.y.0 + f * (p.y.1 - p.y.0);
            let (px, py) = (p.sx(xv), p.sy(yv));
            if x_ticks {
                let _ = writeln!(
                    p.body,
                    r##"<line x1="{px:.1}" y1="{y1:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/><text x="{px:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
                    y1 + 4.0,
                    y1 + 16.0,
                    tick(xv)
                );
            }
            let _ = writeln!(
                p.body,
                r##"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                py + 3.0,
                tick(yv)
            );
        }
        p
    }

    fn sx(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.sx(x), self.sy(y)))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            coords.join(" ")
        );
    }

    pub fn circle(&mut self, x: f64, y: f64, color: &str, opacity: f64) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}" fill-opacity="{opacity:.3}"/>"#,
            self.sx(x),
            self.sy(y)
        );
    }

    /// Vertical bar from 0 to `y` centred at `x`, `width` in data units.
    pub fn bar(&mut self, x: f64, width: f64, y: f64, color: &str) {
        let (l, r) = (self.sx(x - width / 2.0), self.sx(x + width / 2.0));
        let (a, b) = (self.sy(0.0), self.sy(y));
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            a.min(b),
            r - l,
            (a - b).abs()
        );
    }

    pub fn whisker(&mut self, x: f64, lo: f64, hi: f64) {
        let (px, a, b) = (self.sx(x), self.sy(lo), self.sy(hi));
        let _ = writeln!(
            self.body,
            r##"<path d="M{px:.2},{a:.2}V{b:.2}M{:.2},{a:.2}H{:.2}M{:.2},{b:.2}H{:.2}" stroke="#000" fill="none"/>"##,
            px - 4.0,
            px + 4.0,
            px - 4.0,
            px + 4.0
        );
    }

    pub fn hline(&mut self, y: f64) {
        let py = self.sy(y);
        let _ = writeln!(
            self.body,
            r##"<line x1="{LEFT:.1}" y1="{py:.2}" x2="{:.1}" y2="{py:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            WIDTH - RIGHT
        );
    }

    pub fn label(&mut self, x: f64, y: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            self.sx(x),
            self.sy(y) + 14.0,
            esc(text)
        );
    }

    pub fn note(&mut self, text: &str) {
        let _ = writeln!(
            self.body,
            r##"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle" fill="#666">{}</text>"##,
            (LEFT + WIDTH - RIGHT) / 2.0,
            (TOP + HEIGHT - BOTTOM) / 2.0,
            esc(text)
        );
    }

    pub fn legend(&mut self, text: &str, color: &str) {
        let y = TOP + 8.0 + 16.0 * self.legend as f64;
        let x = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            y - 8.0,
            x + 16.0,
            y + 1.0,
            esc(text)
        );
        self.legend += 1;
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Range covering all values, or `(0, 1)` for none.
pub fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
