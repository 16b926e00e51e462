//! Finite snowflake approximations `f_n` and their Green's lines.
//!
//! `f_n = f_{n−1} ∘ K_{kⁿ}φ_{θn}` unrolls to
//! `f_n(z) = φ_{θ0}(φ_{θ1}(…φ_{θn}(z^{kⁿ})^{1/k}…)^{1/k})`.
//! Evaluation runs in log space: with `L_n = kⁿ log z` and
//! `g(w) = φ(w)/w`,
//!
//! ```text
//! L_{j−1} = (L_j + log g(e^{L_j − iθ_j})) / k,      f_n(z) = φ_{θ0}(e^{L_0}).
//! ```
//!
//! `log g` is single valued on `|w| > 1` (g has no zeros there and tends to
//! `(1+c)s` at ∞), so the only branch bookkeeping is continuing `log g`
//! along a traced curve. `e^{L_j}` is never formed for `Re L_j` large, which
//! keeps `z^{kⁿ}` in range.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::SnowflakeParams;
use crate::error::{Error, Result};

pub const MAX_DEPTH: usize = 6;
pub const MAX_POINTS: usize = 1 << 20;
/// Above this `Re log w`, `log g(w)` is replaced by its value at ∞.
const ASYMPTOTIC_LOG_RADIUS: f64 = 30.0;
/// Steps of the inward ray used to fix the branch of `log g` at a start point.
const RAY_STEPS: usize = 512;
const MAX_BISECTIONS: usize = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnowflakeRealization {
    pub params: SnowflakeParams,
    pub depth: usize,
    /// `θ_0..=θ_depth`, each in `[0, 2π)`.
    pub angles: Vec<f64>,
    pub seed: u64,
}

impl SnowflakeRealization {
    /// Angles drawn uniformly from a seeded ChaCha8 stream.
    pub fn random(params: SnowflakeParams, depth: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..=depth)
            .map(|_| {
                let a = rng.random::<f64>() * TAU;
                if a >= TAU {
                    0.0
                } else {
                    a
                }
            })
            .collect();
        Self::with_angles(params, angles, seed)
    }

    pub fn with_angles(params: SnowflakeParams, angles: Vec<f64>, seed: u64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidParameter("need at least one angle".into()));
        }
        let depth = angles.len() - 1;
        if depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} exceeds the cap {MAX_DEPTH}"
            )));
        }
        if let Some(a) = angles.iter().find(|a| !(0.0..TAU).contains(*a)) {
            return Err(Error::InvalidParameter(format!("angle {a} outside [0, 2π)")));
        }
        Ok(SnowflakeRealization {
            params,
            depth,
            angles,
            seed,
        })
    }

    fn kn(&self) -> f64 {
        self.params.kf().powi(self.depth as i32)
    }

    fn log_g_infinity(&self) -> f64 {
        ((1.0 + self.params.slit.c) * self.params.slit.s).ln()
    }

    /// Principal `log g(e^{L−iθ})`.
    fn principal_log_g(&self, l: Complex64, theta: f64) -> Complex64 {
        if l.re > ASYMPTOTIC_LOG_RADIUS {
            return Complex64::new(self.log_g_infinity(), 0.0);
        }
        let w = (l - Complex64::new(0.0, theta)).exp();
        (self.params.slit.phi(w) / w).ln()
    }

    /// `log g` on the branch with `log g(∞) = log((1+c)s)`, found by
    /// continuing along the ray from a large radius down to `e^L`.
    fn canonical_log_g(&self, l: Complex64, theta: f64) -> Complex64 {
        if l.re > ASYMPTOTIC_LOG_RADIUS {
            return Complex64::new(self.log_g_infinity(), 0.0);
        }
        let mut cur = Complex64::new(self.log_g_infinity(), 0.0);
        for i in 0..=RAY_STEPS {
            let re = ASYMPTOTIC_LOG_RADIUS + (l.re - ASYMPTOTIC_LOG_RADIUS) * i as f64 / RAY_STEPS as f64;
            let v = self.principal_log_g(Complex64::new(re, l.im), theta);
            cur = continue_branch(v, cur);
        }
        cur
    }
}

/// Shift `v` by a multiple of `2πi` to land nearest `reference`.
fn continue_branch(v: Complex64, reference: Complex64) -> Complex64 {
    let turns = ((reference.im - v.im) / TAU).round();
    v + Complex64::new(0.0, TAU * turns)
}

/// `f_n` at one point together with the per-level data used for branch
/// continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    /// `L_0..=L_n`.
    pub levels: Vec<Complex64>,
    /// `log g` at levels `1..=n` (index `j−1`).
    pub log_g: Vec<Complex64>,
}

/// `f_n(z)` given `L_n = kⁿ log z`. With a reference evaluation, each
/// `log g` (equivalently each k-th root) is the one nearest the reference;
/// without, the canonical branch is used.
pub fn eval_from_log(
    real: &SnowflakeRealization,
    l_top: Complex64,
    branch_ref: Option<&Evaluation>,
) -> Evaluation {
    let n = real.depth;
    let k = real.params.kf();
    let mut levels = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut log_g = vec![Complex64::new(0.0, 0.0); n];
    levels[n] = l_top;
    for j in (1..=n).rev() {
        let theta = real.angles[j];
        let lg = match branch_ref {
            Some(r) => continue_branch(real.principal_log_g(levels[j], theta), r.log_g[j - 1]),
            None => real.canonical_log_g(levels[j], theta),
        };
        log_g[j - 1] = lg;
        levels[j - 1] = (levels[j] + lg) / k;
    }
    let value = rotated_phi(real, levels[0]);
    Evaluation {
        value,
        levels,
        log_g,
    }
}

/// `φ_{θ0}(e^{L})`, using the asymptotic form when `e^L` would overflow.
fn rotated_phi(real: &SnowflakeRealization, l: Complex64) -> Complex64 {
    let theta = real.angles[0];
    if l.re > ASYMPTOTIC_LOG_RADIUS {
        return (l + real.log_g_infinity()).exp();
    }
    let rot = Complex64::from_polar(1.0, theta);
    let w = l.exp();
    rot * real.params.slit.phi(w / rot)
}

/// `f_n(z)` for `|z| > 1`.
pub fn eval_approximation(
    real: &SnowflakeRealization,
    z: Complex64,
    branch_ref: Option<&Evaluation>,
) -> Result<Evaluation> {
    if !(z.norm() > 1.0) {
        return Err(Error::OutsideDomain { re: z.re, im: z.im });
    }
    Ok(eval_from_log(real, z.ln() * real.kn(), branch_ref))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub label: String,
    pub points: Vec<Complex64>,
    pub closed: bool,
    /// False when refinement hit the point cap.
    pub complete: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let open: f64 = self.points.windows(2).map(|p| (p[1] - p[0]).norm()).sum();
        if self.closed {
            open + (self.points[0] - self.points[self.points.len() - 1]).norm()
        } else {
            open
        }
    }

    /// `‖first − last‖`.
    pub fn closure_gap(&self) -> f64 {
        (self.points[0] - self.points[self.points.len() - 1]).norm()
    }

    /// Winding number about `p` of the closed polygon.
    pub fn winding_number(&self, p: Complex64) -> i64 {
        let n = self.points.len();
        let total: f64 = (0..n)
            .map(|i| ((self.points[(i + 1) % n] - p) / (self.points[i] - p)).arg())
            .sum();
        (total / TAU).round() as i64
    }

    pub fn max_chord(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| (p[1] - p[0]).norm())
            .fold(0.0, f64::max)
    }
}

/// Parameterized curve `τ ↦ L_n(τ) = a + i·kⁿτ`, `τ ∈ [τ0, τ1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    /// `log ρ` where `|z|^{kⁿ} = ρ` on the curve.
    pub log_level: f64,
    pub tau0: f64,
    pub tau1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    /// Chord tolerance.
    pub tol: f64,
    pub max_points: usize,
}

impl Default for TraceSettings {
    fn default() -> Self {
        TraceSettings {
            tol: 0.02,
            max_points: MAX_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub eval: Evaluation,
}

fn needs_split(a: &Evaluation, b: &Evaluation, tol: f64, k: f64) -> bool {
    if (b.value - a.value).norm() >= tol {
        return true;
    }
    let root_step = PI / (2.0 * k);
    let n = a.levels.len() - 1;
    (0..n).any(|j| (b.levels[j].im - a.levels[j].im).abs() >= root_step)
        || a
            .log_g
            .iter()
            .zip(&b.log_g)
            .any(|(x, y)| (y.im - x.im).abs() >= 0.5 * PI)
}

/// Samples of `f_n` along the curve by adaptive marching: each step is
/// halved until the chord is below `tol` and every k-th root moves by less
/// than `π/(2k)`, and every sample continues the branches of the one
/// before it. Returns the samples and whether every step met the criteria
/// within the point cap.
pub fn trace_samples(
    real: &SnowflakeRealization,
    spec: &CurveSpec,
    settings: &TraceSettings,
) -> (Vec<Sample>, bool) {
    let k = real.params.kf();
    let kn = real.kn();
    let span = spec.tau1 - spec.tau0;
    let turns = span.abs() / TAU;
    let initial = ((8.0 * kn * turns).ceil() as usize).max(64);
    let max_step = span / initial as f64;
    let min_step = max_step.abs() / 2f64.powi(MAX_BISECTIONS as i32);
    let at = |tau: f64| Complex64::new(spec.log_level, kn * tau);

    let first = eval_from_log(real, at(spec.tau0), None);
    let mut out = vec![Sample {
        tau: spec.tau0,
        eval: first,
    }];
    let mut complete = true;
    let mut step = max_step;
    loop {
        let cur = out.last().expect("nonempty");
        let remaining = spec.tau1 - cur.tau;
        if remaining.abs() <= 1e-15 * span.abs() {
            break;
        }
        let last_step = step.abs() >= remaining.abs();
        let tau = if last_step { spec.tau1 } else { cur.tau + step };
        let eval = eval_from_log(real, at(tau), Some(&cur.eval));
        let split = needs_split(&cur.eval, &eval, settings.tol, k);
        if split && step.abs() > min_step && out.len() + 1 < settings.max_points {
            step *= 0.5;
            continue;
        }
        if split {
            complete = false;
        }
        out.push(Sample { tau, eval });
        if !split {
            step = (2.0 * step).clamp(-max_step.abs(), max_step.abs());
        }
    }
    (out, complete)
}

fn trace(real: &SnowflakeRealization, spec: &CurveSpec, settings: &TraceSettings, label: String, closed: bool) -> Polyline {
    let (samples, complete) = trace_samples(real, spec, settings);
    if !complete {
        log::warn!("{label}: refinement limit reached, curve left partially refined");
    }
    // for a closed curve the last sample is the image of the first point again
    let points: Vec<Complex64> = samples.into_iter().map(|s| s.eval.value).collect();
    Polyline {
        label,
        points,
        closed,
        complete,
    }
}

/// Image of `|z| = r` under `f_n`.
pub fn trace_green_line(real: &SnowflakeRealization, r: f64, settings: &TraceSettings) -> Result<Polyline> {
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("Green's line radius {r} must be > 1")));
    }
    let spec = CurveSpec {
        log_level: r.ln() * real.kn(),
        tau0: 0.0,
        tau1: TAU,
    };
    Ok(trace(real, &spec, settings, format!("green_line r={r}"), true))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderScene {
    pub curves: Vec<Polyline>,
    pub labels: Vec<String>,
}

impl RenderScene {
    pub fn total_length(&self) -> f64 {
        self.curves.iter().map(Polyline::length).sum()
    }

    pub fn bounding_box(&self) -> Option<(f64, f64, f64, f64)> {
        let mut pts = self.curves.iter().flat_map(|c| c.points.iter());
        let first = pts.next()?;
        Some(pts.fold((first.re, first.im, first.re, first.im), |(a, b, c, d), p| {
            (a.min(p.re), b.min(p.im), c.max(p.re), d.max(p.im))
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Green's lines at `|z|^{kⁿ} = level`.
    pub green_levels: Vec<f64>,
    /// Boundary curve at `|z|^{kⁿ} = boundary_level`.
    pub boundary_level: f64,
    /// Parameter range of the boundary arc; `None` for the whole circle.
    pub arc: Option<(f64, f64)>,
    pub trace: TraceSettings,
}

impl SceneConfig {
    /// A small boundary arc and three Green's lines.
    pub fn figure(k: u32) -> Self {
        SceneConfig {
            green_levels: vec![1.05, 1.2, 1.5],
            boundary_level: 1.001,
            arc: Some((0.0, TAU / f64::from(k))),
            trace: TraceSettings::default(),
        }
    }
}

pub fn render_scene(real: &SnowflakeRealization, cfg: &SceneConfig) -> Result<RenderScene> {
    if let Some(l) = cfg
        .green_levels
        .iter()
        .chain(std::iter::once(&cfg.boundary_level))
        .find(|l| !(**l > 1.0))
    {
        return Err(Error::InvalidParameter(format!("curve level {l} must be > 1")));
    }
    let kn = real.kn();
    let mut jobs: Vec<(CurveSpec, String, bool)> = Vec::new();
    let (a, b, closed, label) = match cfg.arc {
        Some((a, b)) => (a, b, false, "boundary_arc"),
        None => (0.0, TAU, true, "boundary"),
    };
    jobs.push((
        CurveSpec {
            log_level: cfg.boundary_level.ln(),
            tau0: a,
            tau1: b,
        },
        label.into(),
        closed,
    ));
    for &lvl in &cfg.green_levels {
        let r = lvl.powf(1.0 / kn);
        jobs.push((
            CurveSpec {
                log_level: lvl.ln(),
                tau0: 0.0,
                tau1: TAU,
            },
            format!("green_line r={r}"),
            true,
        ));
    }
    let curves: Vec<Polyline> = jobs
        .par_iter()
        .map(|(spec, label, closed)| trace(real, spec, &cfg.trace, label.clone(), *closed))
        .collect();
    let labels = curves.iter().map(|c| c.label.clone()).collect();
    Ok(RenderScene { curves, labels })
}

/// SVG 1.1 with one `path` per polyline; the y axis points up.
pub fn write_svg<W: Write>(scene: &RenderScene, out: W) -> Result<()> {
    write_svg_annotated(scene, None, out)
}

/// [`write_svg`] with an XML comment after the declaration.
pub fn write_svg_annotated<W: Write>(scene: &RenderScene, note: Option<&str>, mut out: W) -> Result<()> {
    let (x0, y0, x1, y1) = scene
        .bounding_box()
        .ok_or_else(|| Error::Render("scene has no curves".into()))?;
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let pad = 0.02 * span;
    let stroke = 1e-3 * span;
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#)?;
    if let Some(note) = note {
        writeln!(out, "<!-- {} -->", note.replace("--", "- -"))?;
    }
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        x0 - pad,
        -y1 - pad,
        x1 - x0 + 2.0 * pad,
        y1 - y0 + 2.0 * pad
    )?;
    for (i, c) in scene.curves.iter().enumerate() {
        write!(
            out,
            r#"<path id="curve{i}" class="{}" fill="none" stroke="black" stroke-width="{stroke}" d=""#,
            xml_escape(&c.label)
        )?;
        for (j, p) in c.points.iter().enumerate() {
            write!(out, "{}{} {} ", if j == 0 { "M" } else { "L" }, p.re, -p.im)?;
        }
        if c.closed {
            write!(out, "Z")?;
        }
        writeln!(out, r#""><title>{}</title></path>"#, xml_escape(&c.label))?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn export_svg(scene: &RenderScene, path: &Path) -> Result<()> {
    if scene.curves.is_empty() {
        return Err(Error::Render("scene has no curves".into()));
    }
    let mut buf = Vec::new();
    write_svg(scene, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// CSV rows `curve_id,re,im`.
pub fn write_csv<W: Write>(scene: &RenderScene, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve_id", "re", "im"])?;
    for (i, c) in scene.curves.iter().enumerate() {
        for p in &c.points {
            w.write_record([i.to_string(), p.re.to_string(), p.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn realization(l: f64, s: f64, k: u32, angles: Vec<f64>) -> SnowflakeRealization {
        let p = SnowflakeParams::new(1.0, k, l, s).unwrap();
        SnowflakeRealization::with_angles(p, angles, 0).unwrap()
    }

    #[test]
    fn identity_block_is_identity() {
        for depth in 0..4 {
            let r = realization(0.0, 1.0, 3, vec![0.0; depth + 1]);
            let z = Complex64::new(1.3, -0.7);
            let f = eval_approximation(&r, z, None).unwrap().value;
            assert!((f - z).norm() < 1e-12, "depth {depth}: {f}");
        }
    }

    #[test]
    fn depth_zero_is_rotated_block() {
        let r = realization(73.0, 1.002, 13, vec![0.4]);
        let z = Complex64::new(-2.0, 1.5);
        let rot = Complex64::from_polar(1.0, 0.4);
        let expect = rot * r.params.slit.phi(z / rot);
        let f = eval_approximation(&r, z, None).unwrap().value;
        assert!((f - expect).norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn depth_one_matches_direct_root() {
        let r = realization(7.0, 1.0, 5, vec![0.3, 1.1]);
        let z = Complex64::from_polar(1.5, 0.2);
        let f = eval_approximation(&r, z, None).unwrap().value;
        // a k-th root of φ_{θ1}(z^k); f must equal φ_{θ0} of one of them
        let rot1 = Complex64::from_polar(1.0, 1.1);
        let inner = rot1 * r.params.slit.phi(z.powu(5) / rot1);
        let rot0 = Complex64::from_polar(1.0, 0.3);
        let best = (0..5)
            .map(|j| {
                let w = inner.powf(0.2) * Complex64::from_polar(1.0, TAU * j as f64 / 5.0);
                (rot0 * r.params.slit.phi(w / rot0) - f).norm()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-10, "{best}");
    }

    #[test]
    fn seeded_angles_reproducible() {
        let p = SnowflakeParams::new(1.0, 13, 73.0, 1.002).unwrap();
        let a = SnowflakeRealization::random(p, 3, 42).unwrap();
        let b = SnowflakeRealization::random(p, 3, 42).unwrap();
        let c = SnowflakeRealization::random(p, 3, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.angles, c.angles);
        assert_eq!(a.angles.len(), 4);
        assert!(a.angles.iter().all(|t| (0.0..TAU).contains(t)));
    }

    #[test]
    fn identity_green_line_is_circle() {
        let r = realization(0.0, 1.0, 2, vec![0.0, 0.0]);
        let line = trace_green_line(&r, 1.5, &TraceSettings::default()).unwrap();
        assert!(line.points.iter().all(|p| (p.norm() - 1.5).abs() < 1e-12));
        assert!(line.max_chord() < 0.02);
        assert_eq!(line.winding_number(Complex64::new(0.0, 0.0)), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let r = realization(0.0, 1.0, 2, vec![0.0]);
        assert!(eval_approximation(&r, Complex64::new(0.5, 0.0), None).is_err());
        assert!(trace_green_line(&r, 1.0, &TraceSettings::default()).is_err());
        let p = SnowflakeParams::new(1.0, 2, 0.0, 1.0).unwrap();
        assert!(SnowflakeRealization::with_angles(p, vec![0.0; 8], 0).is_err());
        assert!(SnowflakeRealization::with_angles(p, vec![TAU], 0).is_err());
        let empty = RenderScene {
            curves: vec![],
            labels: vec![],
        };
        assert!(write_svg(&empty, Vec::new()).is_err());
    }

    #[test]
    fn unit_circle_svg() {
        let pts = (0..64)
            .map(|i| Complex64::from_polar(1.0, TAU * i as f64 / 64.0))
            .collect();
        let scene = RenderScene {
            curves: vec![Polyline {
                label: "circle".into(),
                points: pts,
                closed: true,
                complete: true,
            }],
            labels: vec!["circle".into()],
        };
        let (x0, y0, x1, y1) = scene.bounding_box().unwrap();
        assert!((x0 + 1.0).abs() < 1e-2 && (x1 - 1.0).abs() < 1e-12);
        assert!((y0 + 1.0).abs() < 1e-2 && (y1 - 1.0).abs() < 1e-2);
        let mut buf = Vec::new();
        write_svg(&scene, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.matches("<path").count(), 1);
        assert!(text.contains("Z\""));
    }

    #[test]
    fn far_field_ratio_converges() {
        let r = realization(73.0, 1.002, 13, vec![0.1, 2.0, 4.0]);
        let ratio = |x: f64| {
            let z = Complex64::new(x, 0.3 * x);
            eval_approximation(&r, z, None).unwrap().value.norm() / z.norm()
        };
        let (a, b) = (ratio(1e5), ratio(1e6));
        assert!(a > 0.0 && ((a - b) / b).abs() < 1e-3, "{a} {b}");
    }
}
