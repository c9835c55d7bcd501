//! Static SVG figures.

use std::fmt::Write as _;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::experiments::{GrowthFit, GrowthModel};

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Heatline,
    AgentLines,
    CostVsN,
}

impl std::str::FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heatline" => Ok(PlotKind::Heatline),
            "agent-lines" => Ok(PlotKind::AgentLines),
            "cost-vs-n" => Ok(PlotKind::CostVsN),
            other => Err(Error::Domain(format!("unknown plot kind '{other}'"))),
        }
    }
}

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    px: (f64, f64, f64, f64),
}

impl Axes {
    fn new(x: (f64, f64), y: (f64, f64), px: (f64, f64, f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 1.0, a + 1.0) };
        let (x0, x1) = pad(x);
        let (y0, y1) = pad(y);
        Self { x0, x1, y0, y1, px }
    }

    fn sx(&self, x: f64) -> f64 {
        let (l, _, w, _) = self.px;
        l + (x - self.x0) / (self.x1 - self.x0) * w
    }

    fn sy(&self, y: f64) -> f64 {
        let (_, t, _, h) = self.px;
        t + h - (y - self.y0) / (self.y1 - self.y0) * h
    }

    fn frame(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let (l, t, w, h) = self.px;
        let _ = writeln!(
            s,
            r#"<rect x="{l:.1}" y="{t:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x0 + f * (self.x1 - self.x0);
            let yv = self.y0 + f * (self.y1 - self.y0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                self.sx(xv),
                t + h + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
                l - 6.0,
                self.sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            l + w / 2.0,
            t + h + 36.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            t + h / 2.0,
            t + h / 2.0,
            escape(ylabel)
        );
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn plot_area() -> (f64, f64, f64, f64) {
    (LEFT, TOP, W - LEFT - RIGHT, H - TOP - BOTTOM)
}

/// Blue for negative, white at zero, red for positive.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v >= 0.0 {
        (255.0, 255.0 * (1.0 - v), 255.0 * (1.0 - v))
    } else {
        (255.0 * (1.0 + v), 255.0 * (1.0 + v), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn sample_indices(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut v: Vec<usize> = (0..max).map(|i| i * (len - 1) / (max - 1)).collect();
    v.dedup();
    v
}

fn check(traj: &Trajectory) -> Result<()> {
    if traj.states().is_empty() || traj.dim() == 0 {
        return Err(Error::EmptyData("trajectory holds no states".into()));
    }
    Ok(())
}

/// Time–agent matrix shaded by value.
pub fn heatline(traj: &Trajectory, title: &str) -> Result<String> {
    check(traj)?;
    let cols = sample_indices(traj.states().len(), 240);
    let rows = sample_indices(traj.dim(), 120);
    let scale = traj
        .states()
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let steps = traj.stored_steps();
    let t_end = traj.tau(*steps.last().unwrap());
    let ax = Axes::new((0.0, t_end), (1.0, traj.dim() as f64), plot_area());
    let mut s = open(title);
    let (l, t, w, h) = plot_area();
    let cw = w / cols.len() as f64;
    let rh = h / rows.len() as f64;
    for (ci, &c) in cols.iter().enumerate() {
        for (ri, &r) in rows.iter().enumerate() {
            let v = traj.states()[c][r] / scale;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                l + ci as f64 * cw,
                t + h - (ri + 1) as f64 * rh,
                cw + 0.05,
                rh + 0.05,
                diverging(v)
            );
        }
    }
    ax.frame(&mut s, "tau", "agent");
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">max |y| = {}</text>"#,
        W - RIGHT,
        TOP - 4.0,
        tick(scale)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// One polyline per agent, value against rescaled time.
pub fn agent_lines(traj: &Trajectory, title: &str) -> Result<String> {
    check(traj)?;
    let idx = sample_indices(traj.states().len(), 400);
    let agents = sample_indices(traj.dim(), 64);
    let steps = traj.stored_steps();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for &i in &idx {
        for &a in &agents {
            lo = lo.min(traj.states()[i][a]);
            hi = hi.max(traj.states()[i][a]);
        }
    }
    let ax = Axes::new((0.0, traj.tau(*steps.last().unwrap())), (lo, hi), plot_area());
    let mut s = open(title);
    for (k, &a) in agents.iter().enumerate() {
        let hue = 360.0 * k as f64 / agents.len() as f64;
        let pts: Vec<String> = idx
            .iter()
            .map(|&i| format!("{:.2},{:.2}", ax.sx(traj.tau(steps[i])), ax.sy(traj.states()[i][a])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="hsl({hue:.0},70%,45%)" stroke-width="1" points="{}"/>"#,
            pts.join(" ")
        );
    }
    ax.frame(&mut s, "tau", "y_j");
    s.push_str("</svg>\n");
    Ok(s)
}

/// A labelled cost column with an optional growth fit.
#[derive(Debug, Clone)]
pub struct CostSeries {
    pub label: String,
    pub points: Vec<(usize, f64)>,
    pub fit: Option<GrowthFit>,
}

/// `log10(cost)` against `N` with fitted curves, plus an inset of `ln(cost)`
/// against `N²`.
pub fn cost_vs_n(series: &[CostSeries], title: &str) -> Result<String> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(_, c)| *c > 0.0 && c.is_finite())
        .map(|&(n, c)| (n as f64, c))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyData("no positive costs to plot".into()));
    }
    let nmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let nmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let lmin = pts.iter().map(|p| p.1.log10()).fold(f64::INFINITY, f64::min);
    let lmax = pts.iter().map(|p| p.1.log10()).fold(f64::NEG_INFINITY, f64::max);
    let (l, t, w, h) = plot_area();
    let main = Axes::new((nmin, nmax), (lmin.floor(), lmax.ceil()), (l, t, w * 0.62, h));
    let inset = Axes::new(
        (nmin * nmin, nmax * nmax),
        (lmin * std::f64::consts::LN_10, lmax * std::f64::consts::LN_10),
        (l + w * 0.72, t + 10.0, w * 0.28, h * 0.45),
    );
    let mut s = open(title);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, ser) in series.iter().enumerate() {
        let color = palette[i % palette.len()];
        for &(n, c) in ser.points.iter().filter(|(_, c)| *c > 0.0 && c.is_finite()) {
            let n = n as f64;
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                main.sx(n),
                main.sy(c.log10())
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                inset.sx(n * n),
                inset.sy(c.ln())
            );
        }
        if let Some(fit) = &ser.fit {
            let curve: Vec<String> = (0..=60)
                .map(|k| {
                    let n = nmin + (nmax - nmin) * k as f64 / 60.0;
                    let c = fit.model.predict(fit.intercept, fit.fitted_rate, n);
                    format!("{:.2},{:.2}", main.sx(n), main.sy(c.log10()))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-dasharray="5,3" points="{}"/>"#,
                curve.join(" ")
            );
        }
        let label = match &ser.fit {
            Some(f) if f.model != GrowthModel::Bounded => {
                format!("{} ({}, rate {})", ser.label, f.model.name(), tick(f.fitted_rate))
            }
            Some(f) => format!("{} ({})", ser.label, f.model.name()),
            None => ser.label.clone(),
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{color}">{}</text>"#,
            l + w * 0.72,
            t + h * 0.62 + 16.0 * i as f64,
            escape(&label)
        );
    }
    main.frame(&mut s, "N", "log10 cost");
    inset.frame(&mut s, "N^2", "ln cost");
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_ends() {
        assert_eq!(diverging(0.0), "#ffffff");
        assert_eq!(diverging(1.0), "#ff0000");
        assert_eq!(diverging(-1.0), "#0000ff");
    }

    #[test]
    fn empty_cost_series_rejected() {
        assert!(matches!(cost_vs_n(&[], "x"), Err(Error::EmptyData(_))));
    }

    #[test]
    fn sampling_keeps_ends() {
        let v = sample_indices(1001, 400);
        assert_eq!(v[0], 0);
        assert_eq!(*v.last().unwrap(), 1000);
        assert!(v.len() <= 400);
    }
}
