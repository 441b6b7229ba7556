//! Minimal static SVG emitter: line/polyline/rect/text on a mapped
//! coordinate box. No external plotting dependency; output is fully
//! deterministic.

pub struct SvgCanvas {
    width: f64,
    height: f64,
    margin: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl SvgCanvas {
    pub fn new(width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self { width, height, margin: 42.0, x_range, y_range, body: String::new() }
    }

    fn map_x(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.margin + (x - lo) / (hi - lo) * (self.width - 2.0 * self.margin)
    }

    fn map_y(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        // SVG y grows downward.
        self.height - self.margin - (y - lo) / (hi - lo) * (self.height - 2.0 * self.margin)
    }

    pub fn line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        self.body.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" style=\"{}\"/>\n",
            self.map_x(a.0),
            self.map_y(a.1),
            self.map_x(b.0),
            self.map_y(b.1),
            style
        ));
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], style: &str) {
        if points.len() < 2 {
            return;
        }
        let pts: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.map_x(x), self.map_y(y)))
            .collect();
        self.body.push_str(&format!(
            "<polyline fill=\"none\" points=\"{}\" style=\"{}\"/>\n",
            pts.join(" "),
            style
        ));
    }

    /// Axis-aligned data-space rectangle given by opposite corners.
    pub fn rect(&mut self, corner_a: (f64, f64), corner_b: (f64, f64), style: &str) {
        let x0 = self.map_x(corner_a.0.min(corner_b.0));
        let x1 = self.map_x(corner_a.0.max(corner_b.0));
        let y1 = self.map_y(corner_a.1.min(corner_b.1));
        let y0 = self.map_y(corner_a.1.max(corner_b.1));
        self.body.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" style=\"{}\"/>\n",
            x0,
            y0,
            x1 - x0,
            y1 - y0,
            style
        ));
    }

    pub fn text(&mut self, at: (f64, f64), content: &str, style: &str) {
        self.body.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" style=\"{}\">{}</text>\n",
            self.map_x(at.0),
            self.map_y(at.1),
            style,
            content
        ));
    }

    pub fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x_lo, x_hi) = self.x_range;
        let (y_lo, y_hi) = self.y_range;
        let axis = "stroke:#444;stroke-width:1";
        let x0 = x_lo.max(0.0).min(x_hi);
        let y0 = y_lo.max(0.0).min(y_hi);
        self.line((x_lo, y0), (x_hi, y0), axis);
        self.line((x0, y_lo), (x0, y_hi), axis);
        self.text(
            (x_hi, y0),
            x_label,
            "font-size:12px;font-family:monospace;fill:#222",
        );
        self.text(
            (x0, y_hi),
            y_label,
            "font-size:12px;font-family:monospace;fill:#222",
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" \
             viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}
