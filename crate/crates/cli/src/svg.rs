//! Minimal SVG line chart for the MSE-versus-parameter figures: one polyline
//! per series on a log10 vertical axis, log10 horizontal when every sweep
//! value is positive and spread out, linear otherwise.

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    /// (sweep value, positive index) pairs, in sweep order.
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn place(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        if self.hi == self.lo {
            0.5
        } else {
            (t - self.lo) / (self.hi - self.lo)
        }
    }
}

fn x_axis(series: &[Series]) -> Axis {
    let values: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return Axis { lo: 0.0, hi: 1.0, log: false };
    }
    let log = min > 0.0 && max / min >= 8.0;
    if log {
        Axis { lo: min.log10(), hi: max.log10(), log }
    } else {
        let pad = if max == min { 0.5 } else { 0.0 };
        Axis { lo: min - pad, hi: max + pad, log }
    }
}

fn y_axis(series: &[Series]) -> Axis {
    let values: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min > 0.0) || !max.is_finite() {
        return Axis { lo: -1.0, hi: 0.0, log: true };
    }
    let lo = min.log10().floor();
    let hi = max.log10().ceil();
    Axis {
        lo,
        hi: if hi == lo { lo + 1.0 } else { hi },
        log: true,
    }
}

fn fmt(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 10000.0) {
        let s = format!("{v}");
        if s.len() <= 7 {
            s
        } else {
            format!("{v:.3}")
        }
    } else {
        format!("{v:.0e}")
    }
}

pub fn render(title: &str, x_label: &str, series: &[Series]) -> String {
    let xa = x_axis(series);
    let ya = y_axis(series);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xa.place(v) * plot_w;
    let py = |v: f64| TOP + (1.0 - ya.place(v)) * plot_h;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // y decade ticks and grid
    let mut decade = ya.lo;
    while decade <= ya.hi + 1e-9 {
        let y = py(10f64.powf(decade));
        out.push_str(&format!(
            "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
            WIDTH - RIGHT
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{}</text>\n",
            LEFT - 6.0,
            y + 4.0,
            decade as i64
        ));
        decade += 1.0;
    }

    // x ticks at the first series' sweep values
    if let Some(first) = series.first() {
        for &(v, _) in &first.points {
            let x = px(v);
            out.push_str(&format!(
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#999\"/>\n",
                HEIGHT - BOTTOM,
                HEIGHT - BOTTOM + 5.0
            ));
            out.push_str(&format!(
                "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
                HEIGHT - BOTTOM + 18.0,
                fmt(v)
            ));
        }
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 10.0
    ));

    // frame
    out.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\"/>\n"
    ));

    for s in series {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            pts.join(" "),
            s.color
        ));
        for &(x, y) in &s.points {
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.4\" fill=\"{}\"/>\n",
                px(x),
                py(y),
                s.color
            ));
        }
    }

    // legend, top right inside the frame
    for (i, s) in series.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 110.0;
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            x + 22.0,
            s.color
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\">{}</text>\n",
            x + 28.0,
            y + 4.0,
            s.name
        ));
    }
    out.push_str("</svg>\n");
    out
}
