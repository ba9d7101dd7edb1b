//! Self-contained SVG line charts (axes, ticks, legend, optional log scales,
//! reference lines).  No external plotting dependency.

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
    pub series: Vec<Series>,
    /// Horizontal reference lines (value, label).
    pub hlines: Vec<(f64, String)>,
    /// Vertical reference lines (value, label).
    pub vlines: Vec<(f64, String)>,
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Chart {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_x: false,
            log_y: false,
            width: 880.0,
            height: 560.0,
            series: Vec::new(),
            hlines: Vec::new(),
            vlines: Vec::new(),
        }
    }

    pub fn with_log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn with_log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn add_series(&mut self, label: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series { label: label.to_string(), points });
    }

    pub fn add_hline(&mut self, y: f64, label: &str) {
        self.hlines.push((y, label.to_string()));
    }

    pub fn add_vline(&mut self, x: f64, label: &str) {
        self.vlines.push((x, label.to_string()));
    }

    fn tx(&self, v: f64) -> Option<f64> {
        if self.log_x {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    }

    fn ty(&self, v: f64) -> Option<f64> {
        if self.log_y {
            (v > 0.0).then(|| v.log10())
        } else {
            Some(v)
        }
    }

    pub fn render(&self) -> String {
        let (ml, mr, mt, mb) = (78.0, 24.0, 42.0, 56.0);
        let pw = self.width - ml - mr;
        let ph = self.height - mt - mb;

        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (Some(tx), Some(ty)) = (self.tx(x), self.ty(y)) {
                    xs.push(tx);
                    ys.push(ty);
                }
            }
        }
        for &(y, _) in &self.hlines {
            if let Some(ty) = self.ty(y) {
                ys.push(ty);
            }
        }
        for &(x, _) in &self.vlines {
            if let Some(tx) = self.tx(x) {
                xs.push(tx);
            }
        }
        let (x_lo, x_hi) = span(&xs);
        let (y_lo, y_hi) = span(&ys);

        let px = |t: f64| ml + (t - x_lo) / (x_hi - x_lo) * pw;
        let py = |t: f64| mt + ph - (t - y_lo) / (y_hi - y_lo) * ph;

        let mut out = String::with_capacity(16 * 1024);
        out.push_str(&format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
            self.width, self.height, self.width, self.height
        ));
        out.push('\n');
        out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
        out.push('\n');
        out.push_str(&format!(
            r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            escape(&self.title)
        ));
        out.push('\n');

        // frame
        out.push_str(&format!(
            r#"<rect x="{ml:.1}" y="{mt:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333" stroke-width="1"/>"#
        ));
        out.push('\n');

        // ticks
        for t in ticks(x_lo, x_hi, self.log_x) {
            let x = px(t);
            out.push_str(&format!(
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ccc" stroke-width="0.6"/>"#,
                mt,
                mt + ph
            ));
            out.push_str(&format!(
                r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                mt + ph + 16.0,
                tick_label(t, self.log_x)
            ));
            out.push('\n');
        }
        for t in ticks(y_lo, y_hi, self.log_y) {
            let y = py(t);
            out.push_str(&format!(
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ccc" stroke-width="0.6"/>"#,
                ml,
                ml + pw
            ));
            out.push_str(&format!(
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                ml - 6.0,
                y + 4.0,
                tick_label(t, self.log_y)
            ));
            out.push('\n');
        }

        // axis labels
        out.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            ml + pw / 2.0,
            self.height - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            r#"<text x="18" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            mt + ph / 2.0,
            mt + ph / 2.0,
            escape(&self.y_label)
        ));
        out.push('\n');

        // reference lines
        for (v, label) in &self.hlines {
            if let Some(t) = self.ty(*v) {
                let y = py(t);
                out.push_str(&format!(
                    r#"<line x1="{ml:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#888" stroke-width="1" stroke-dasharray="6,4"/>"#,
                    ml + pw
                ));
                out.push_str(&format!(
                    r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end" fill="#555">{}</text>"#,
                    ml + pw - 4.0,
                    y - 4.0,
                    escape(label)
                ));
                out.push('\n');
            }
        }
        for (v, label) in &self.vlines {
            if let Some(t) = self.tx(*v) {
                let x = px(t);
                out.push_str(&format!(
                    r#"<line x1="{x:.1}" y1="{mt:.1}" x2="{x:.1}" y2="{:.1}" stroke="#888" stroke-width="1" stroke-dasharray="6,4"/>"#,
                    mt + ph
                ));
                out.push_str(&format!(
                    r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="#555">{}</text>"#,
                    x + 4.0,
                    mt + 14.0,
                    escape(label)
                ));
                out.push('\n');
            }
        }

        // series
        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                match (self.tx(x), self.ty(y)) {
                    (Some(tx), Some(ty)) if ty.is_finite() && tx.is_finite() => {
                        let cmd = if pen_down { 'L' } else { 'M' };
                        path.push_str(&format!("{cmd}{:.2} {:.2}", px(tx), py(ty)));
                        pen_down = true;
                    }
                    _ => pen_down = false,
                }
            }
            out.push_str(&format!(
                r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.6"/>"#
            ));
            out.push('\n');
            // legend
            let ly = mt + 16.0 + 18.0 * si as f64;
            out.push_str(&format!(
                r#"<rect x="{:.1}" y="{:.1}" width="14" height="4" fill="{color}"/>"#,
                ml + 10.0,
                ly - 4.0
            ));
            out.push_str(&format!(
                r#"<text x="{:.1}" y="{ly:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
                ml + 30.0,
                escape(&s.label)
            ));
            out.push('\n');
        }

        out.push_str("</svg>\n");
        out
    }
}

fn span(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let a = lo.ceil() as i64;
        let b = hi.floor() as i64;
        if b >= a && (b - a) <= 20 {
            return (a..=b).map(|e| e as f64).collect();
        }
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|&m| m * mag)
        .find(|&s| (hi - lo) / s <= 7.0)
        .unwrap_or(mag * 10.0);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-12 * step {
        out.push(t);
        t += step;
    }
    out
}

fn tick_label(t: f64, log: bool) -> String {
    if log {
        let e = t.round() as i32;
        if (t - e as f64).abs() < 1e-9 {
            return format!("1e{e}");
        }
    }
    if t == 0.0 {
        return "0".into();
    }
    if t.abs() >= 0.01 && t.abs() < 10000.0 {
        let s = format!("{t:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{t:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_chart() -> Chart {
        let mut c = Chart::new("demo", "r", "a");
        c.add_series("a(r)", (1..100).map(|i| (i as f64, 1.0 / i as f64)).collect());
        c.add_hline(0.5, "limit");
        c
    }

    #[test]
    fn render_is_wellformed_and_deterministic() {
        let c = demo_chart();
        let svg = c.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains("limit"));
        assert_eq!(svg, c.render(), "render must be deterministic");
    }

    #[test]
    fn log_axes_drop_nonpositive_points() {
        let mut c = Chart::new("log demo", "x", "y").with_log_x().with_log_y();
        c.add_series("s", vec![(0.0, 1.0), (1.0, 1.0), (10.0, 0.1), (100.0, 0.01)]);
        let svg = c.render();
        assert!(svg.contains("1e0"));
        assert!(svg.contains("1e2"));
    }

    #[test]
    fn escapes_markup() {
        let mut c = Chart::new("a < b & c", "x", "y");
        c.add_series("s", vec![(0.0, 0.0), (1.0, 1.0)]);
        let svg = c.render();
        assert!(svg.contains("a &lt; b &amp; c"));
    }
}
