//! Implementations of the CLI subcommands: each consumes a parsed
//! system or parameter set and writes its artifacts under the output
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use sinkflow::error::{Error, Result};
use sinkflow::iterates::{
    iterate_closely, iterate_nd_diag, plan_wide, psi_closely, psi_nd, IterateSet, PsiApprox,
};
use sinkflow::mm::{
    self, mm_expansion, mm_spectrum, nondimensionalize, rate_law_error_series, rate_laws,
    sigma_recursion,
};
use sinkflow::numeric::{integrate, IntegrateOptions};
use sinkflow::relate::{relate_power_series, relate_star, relate_via_basis, StarRelation};
use sinkflow::system::{Classification, SinkSystem};
use sinkflow::validate;

use crate::svg::SvgCanvas;

pub struct Output {
    dir: PathBuf,
    report: String,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), report: String::new() })
    }

    pub fn section(&mut self, text: &str) {
        self.report.push_str(text);
        if !text.ends_with('\n') {
            self.report.push('\n');
        }
    }

    pub fn write_file(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        Ok(())
    }

    pub fn finish(self) -> Result<String> {
        fs::write(self.dir.join("report.txt"), &self.report)?;
        Ok(self.report)
    }
}

fn integrate_opts(rtol: f64, atol: f64, ball: f64) -> IntegrateOptions {
    IntegrateOptions { rtol, atol, ..IntegrateOptions::default() }.with_ball(ball)
}

/// `classify`: spectrum, κ, spacing class, resonances.
pub fn classify(sys: &SinkSystem, out: &mut Output) -> Result<()> {
    let spec = sys.spectrum();
    let mut s = String::new();
    let _ = writeln!(s, "eigenvalues: {:?}", spec.eigenvalues());
    let _ = writeln!(s, "kappa: {}", spec.kappa());
    let _ = writeln!(s, "alpha: {} (beta {})", sys.field().alpha(), sys.field().beta());
    let star = sys.dim() == 2 && spec.kappa() == 1.0;
    let _ = writeln!(
        s,
        "classification: {}{}",
        if star { "star node, " } else { "" },
        match sys.classification() {
            Classification::CloselySpaced =>
                format!("closely-spaced (kappa {} < alpha {})", spec.kappa(), sys.field().alpha()),
            Classification::WidelySpaced =>
                format!("widely-spaced (kappa {} >= alpha {})", spec.kappa(), sys.field().alpha()),
        }
    );
    if spec.resonances().is_empty() {
        let _ = writeln!(s, "resonances: none up to order ceil(kappa)+1");
    } else {
        for r in spec.resonances() {
            let _ = writeln!(
                s,
                "resonance: lambda_{} = {:?}·lambda (order {})",
                r.target + 1,
                r.multi_index,
                r.order
            );
        }
    }
    for w in spec.near_resonances() {
        let _ = writeln!(
            s,
            "warning: near-resonance lambda_{} ≈ {:?}·lambda (defect {:.3e})",
            w.target + 1,
            w.multi_index,
            w.defect
        );
    }
    out.section(&s);
    out.write_file("spectrum.json", &serde_json::to_string_pretty(&spec)?)?;
    Ok(())
}

fn build_iterates(sys: &SinkSystem, m_max: u32) -> Result<(SinkSystem, IterateSet)> {
    let diag = sys.diagonal_system()?;
    let iters = match diag.classification() {
        Classification::CloselySpaced => iterate_closely(&diag, m_max)?,
        Classification::WidelySpaced => {
            let plan = plan_wide(diag.spectrum(), diag.field())?;
            iterate_nd_diag(&diag, &plan, m_max)?
        }
    };
    Ok((diag, iters))
}

/// `iterates`: pretty and machine-readable iterate dump with guaranteed
/// orders.
pub fn iterates(sys: &SinkSystem, m_max: u32, out: &mut Output) -> Result<()> {
    let (_diag, iters) = build_iterates(sys, m_max)?;
    let mut s = String::new();
    let _ = writeln!(s, "regime: {:?}", iters.regime());
    for m in 1..=iters.m_max() {
        let (rate, power) = iters.guaranteed_order(m);
        let _ = writeln!(
            s,
            "D_{m}: guaranteed error O(e^{{{rate}·mu1·t}}·|x0|^{power})"
        );
    }
    out.section(&s);
    out.section(&iters.display_with("y0"));
    let records: Vec<_> = (1..=iters.m_max())
        .map(|m| {
            let comps: Vec<_> = iters.iterate(m).iter().map(|c| c.term_records()).collect();
            json!({ "m": m, "components": comps, "guaranteed_order": iters.guaranteed_order(m) })
        })
        .collect();
    out.write_file("iterates.json", &serde_json::to_string_pretty(&records)?)?;
    Ok(())
}

fn build_psi(sys: &SinkSystem, m_max: u32) -> Result<(SinkSystem, PsiApprox)> {
    let diag = sys.diagonal_system()?;
    let psi = match diag.classification() {
        Classification::CloselySpaced => psi_closely(&diag, m_max)?,
        Classification::WidelySpaced => {
            let plan = plan_wide(diag.spectrum(), diag.field())?;
            psi_nd(&diag, &plan, m_max)?
        }
    };
    Ok((diag, psi))
}

/// `psi`: transformation approximations with numeric spot checks.
pub fn psi(sys: &SinkSystem, m_max: u32, rtol: f64, atol: f64, out: &mut Output) -> Result<()> {
    let (diag, psi) = build_psi(sys, m_max)?;
    out.section(&psi.display_with("x0"));
    // Spot check against the quadrature evaluation at a small deterministic
    // point in diagonal coordinates.
    let n = diag.dim();
    let x0: Vec<f64> = (0..n).map(|i| 0.01 + 0.005 * i as f64).collect();
    let opts = sinkflow::numeric::PsiOptions {
        tol: 1e-10,
        integrate: integrate_opts(rtol, atol, 0.25),
    };
    let reference = sinkflow::numeric::psi_numeric_with(&diag, &x0, &opts)?;
    let mut s = String::new();
    let _ = writeln!(s, "numeric spot check at x0 = {x0:?} (diagonal coordinates):");
    let _ = writeln!(s, "  psi_numeric = {reference:?}");
    for m in 1..=psi.m_max() {
        let approx = psi.eval(m, &x0);
        let err = approx
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let _ = writeln!(s, "  |psi_{m}(x0) − psi_numeric(x0)| = {err:.3e}");
    }
    out.section(&s);
    out.write_file(
        "psi.json",
        &serde_json::to_string_pretty(&json!({
            "approximations": (1..=psi.m_max())
                .map(|m| psi.psi(m).iter().map(|p| p.term_records()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "spot_check_x0": x0,
            "psi_numeric": reference,
        }))?,
    )?;
    Ok(())
}

/// `relate`: component relation report; for the star node also the
/// concavity sign map.
pub fn relate(
    sys: &SinkSystem,
    rtol: f64,
    atol: f64,
    svg: bool,
    out: &mut Output,
) -> Result<()> {
    let spec = sys.spectrum();
    if sys.dim() != 2 {
        return Err(Error::UnsupportedShape("relate requires a planar system".into()));
    }
    if spec.kappa() == 1.0 && sys.classification() == Classification::CloselySpaced {
        // Star node: y₀ from the numeric transformation at a default
        // initial condition well inside the validity ball.
        let x0 = [0.02, 0.03];
        let opts = sinkflow::numeric::PsiOptions {
            tol: 1e-10,
            integrate: integrate_opts(rtol, atol, 0.25),
        };
        let y0v = sinkflow::numeric::psi_numeric_with(sys, &x0, &opts)?;
        let y0 = [y0v[0], y0v[1]];
        match relate_star(sys, y0)? {
            StarRelation::ZeroSolution => out.section("zero solution: x(t) ≡ 0"),
            StarRelation::Expansion(series) => {
                out.section(&format!("from x0 = {x0:?} (y0 = psi(x0) = {y0:?}):"));
                out.section(&series.render());
                out.write_file("relation.json", &serde_json::to_string_pretty(&series)?)?;
            }
        }
        if svg {
            out.write_file("concavity.svg", &concavity_map_svg(sys))?;
            out.write_file("phase.svg", &phase_portrait_svg(sys, rtol, atol, None)?)?;
        }
        return Ok(());
    }

    // Widely-spaced planar system: resonant path when κ is an integer,
    // integer-power coefficients otherwise.
    let lattice_kappa = spec
        .rate_basis()
        .lattice()
        .filter(|l| l[1] % l[0] == 0)
        .map(|l| l[1] / l[0]);
    match lattice_kappa {
        Some(k) if k >= 2 => {
            let diag = sys.diagonal_system()?;
            let u0 = [0.02, 0.01];
            let opts = sinkflow::numeric::PsiOptions {
                tol: 1e-10,
                integrate: integrate_opts(rtol, atol, 0.25),
            };
            let v0v = sinkflow::numeric::psi_numeric_with(&diag, &u0, &opts)?;
            let series = relate_via_basis(sys, Some([v0v[0], v0v[1]]))?;
            out.section(&format!("resonant relation (kappa = {k}), v0 = psi(u0) at u0 = {u0:?}:"));
            out.section(&series.render());
            out.write_file("relation.json", &serde_json::to_string_pretty(&series)?)?;
        }
        _ => {
            let order = spec.kappa().floor().max(2.0) as u32;
            let coeffs = relate_power_series(sys, order)?;
            let mut s = format!(
                "non-resonant relation (kappa = {:.6}): integer-power coefficients\n",
                spec.kappa()
            );
            for (i, c) in coeffs.iter().enumerate().skip(1) {
                let _ = writeln!(s, "  c_{i} = {c:.12}");
            }
            let _ = writeln!(s, "plus an initial-condition-dependent C·x1^kappa term (fit numerically)");
            out.section(&s);
            out.write_file("relation.json", &serde_json::to_string_pretty(&coeffs)?)?;
        }
    }
    if svg {
        out.write_file("phase.svg", &phase_portrait_svg(sys, rtol, atol, None)?)?;
    }
    Ok(())
}

/// `mm`: the full Michaelis–Menten report.
pub fn mm_report(
    eps: f64,
    eta: f64,
    dimensional: Option<(f64, f64, f64, f64)>,
    sigma_n: u32,
    rtol: f64,
    atol: f64,
    svg: bool,
    out: &mut Output,
) -> Result<()> {
    let mut s = String::new();
    if let Some((k1, km1, k2, e0)) = dimensional {
        let nd = nondimensionalize(k1, km1, k2, e0)?;
        let _ = writeln!(
            s,
            "dimensional input: k1={k1} k-1={km1} k2={k2} e0={e0} → K_m={}, eps={}, eta={}",
            nd.km, nd.params.eps, nd.params.eta
        );
    }
    let m = mm_spectrum(eps, eta)?;
    let _ = writeln!(s, "eps = {eps}, eta = {eta}");
    let _ = writeln!(s, "lambda+ = {:.12}, lambda- = {:.12}", m.lambda_plus, m.lambda_minus);
    let _ = writeln!(s, "sigma+ = {:.12}, sigma- = {:.12}", m.sigma_plus, m.sigma_minus);
    let _ = writeln!(s, "kappa = {:.12}", m.kappa);
    let _ = writeln!(s, "r211 = {:.12}, det P = {:.12}", m.r211, m.det_p);
    let rec = sigma_recursion(eps, eta, sigma_n)?;
    for (n, sig) in rec.sigma.iter().enumerate() {
        let _ = writeln!(s, "sigma_{n} = {sig:.12}");
    }
    if let Some(p) = rec.pole_index {
        let _ = writeln!(s, "sigma recursion pole at n = {p} (n = kappa)");
    }
    let exp = mm_expansion(eps, eta)?;
    let _ = writeln!(s, "expansion class: {:?}", exp.class);
    let _ = writeln!(s, "y(x) template: {}", exp.series.render());
    if let Some(w) = &exp.warning {
        let _ = writeln!(s, "warning: {w}");
    }
    if let Some(alt) = &exp.alternate {
        let _ = writeln!(s, "alternate template: {}", alt.render());
    }
    out.section(&s);

    // Rate-law comparison along a physically relevant trajectory.
    let x0 = [0.05, 0.02];
    let t_end = 14.0 / m.lambda_plus.abs();
    let opts = integrate_opts(rtol, atol, 0.5);
    let report = mm::rate_law_errors(eps, eta, x0, t_end, &opts)?;
    let mut s = String::new();
    if report.conclusive {
        let q = report.qssa_fit.as_ref().unwrap();
        let a = report.alpha_fit.as_ref().unwrap();
        let _ = writeln!(s, "rate-law comparison from (x,y) = {x0:?}:");
        let _ = writeln!(
            s,
            "  QSSA error rate:  fitted {:.5} (predicted {:.5}, model {:?})",
            q.exponent, report.predicted_qssa_rate, q.model
        );
        let _ = writeln!(
            s,
            "  alpha error rate: fitted {:.5} (predicted {:.5}, model {:?}, t-prefactor expected: {})",
            a.exponent, report.predicted_alpha_rate, a.model, report.alpha_prefactor_expected
        );
        let _ = writeln!(
            s,
            "  alpha approximation beats QSSA: {}",
            a.exponent < q.exponent
        );
        if let (Some(affine), Some(pure)) = (&report.alpha_affine_fit, &report.alpha_pure_fit) {
            let _ = writeln!(
                s,
                "  pinned-rate linear-prefactor fit residual {:.3e} vs pure-exponential {:.3e}",
                affine.residual, pure.residual
            );
        }
        let _ = writeln!(s, "  matches predicted class: {}", report.alpha_matches_class(0.15));
    } else {
        let _ = writeln!(s, "rate-law comparison inconclusive: trajectory left the validity ball");
    }
    out.section(&s);
    out.write_file("mm.json", &serde_json::to_string_pretty(&json!({
        "spectrum": m,
        "sigma": rec,
        "expansion": exp,
        "rate_laws": report,
    }))?)?;

    // CSV of the comparison data.
    let sys = mm::planar_system(eps, eta)?;
    let traj = integrate(&sys, &x0, t_end, &opts)?;
    let (times, qssa_err, alpha_err) = rate_law_error_series(&m, &traj);
    let mut csv = String::from("t,x,y,H,alpha,qssa_err,alpha_err\n");
    for (i, &t) in times.iter().enumerate() {
        let state = traj.eval(t);
        let (h, al) = rate_laws(m.sigma_plus, state[0]);
        let _ = writeln!(
            csv,
            "{t:.9e},{:.9e},{:.9e},{h:.9e},{al:.9e},{:.9e},{:.9e}",
            state[0], state[1], qssa_err[i], alpha_err[i]
        );
    }
    out.write_file("rate_laws.csv", &csv)?;
    if svg {
        out.write_file("phase.svg", &phase_portrait_svg(&sys, rtol, atol, Some(m.sigma_plus))?)?;
    }
    Ok(())
}

/// `validate`: the full oracle suite; the caller turns failures into
/// exit code 3.
pub fn validate_cmd(seed: u64, out: &mut Output) -> Result<bool> {
    let checks = validate::run_all(seed);
    let table = validate::render_table(&checks);
    out.section(&table);
    out.write_file("validate.json", &serde_json::to_string_pretty(&checks)?)?;
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    if !failed.is_empty() {
        let mut detail = String::new();
        for c in failed {
            let _ = writeln!(detail, "FAIL {} — {}", c.name, c.detail);
        }
        out.write_file("failures.txt", &detail)?;
        return Ok(false);
    }
    Ok(true)
}

/// Concavity sign map for the star-node relation: sign of the quadratic
/// coefficient over the y₀-plane.
fn concavity_map_svg(sys: &SinkSystem) -> String {
    let mut canvas = SvgCanvas::new(420.0, 420.0, (-1.0, 1.0), (-1.0, 1.0));
    let cells = 48;
    for i in 0..cells {
        for j in 0..cells {
            let y1 = -1.0 + 2.0 * (i as f64 + 0.5) / cells as f64;
            let y2 = -1.0 + 2.0 * (j as f64 + 0.5) / cells as f64;
            let sign = sinkflow::relate::star_quadratic_coeff(sys, [y1, y2])
                .map(f64::signum)
                .unwrap_or(0.0);
            let color = if sign > 0.0 {
                "fill:#7fb3d5"
            } else if sign < 0.0 {
                "fill:#f5b7b1"
            } else {
                "fill:#eeeeee"
            };
            let half = 1.0 / cells as f64;
            canvas.rect((y1 - half, y2 - half), (y1 + half, y2 + half), color);
        }
    }
    canvas.axes("y01", "y02");
    canvas.text((0.55, 0.85), "+", "font-size:20px;fill:#1a5276");
    canvas.text((0.75, 0.3), "-", "font-size:20px;fill:#922b21");
    canvas.finish()
}

/// Phase portrait: a fan of trajectories, plus the two isoclines for the
/// Michaelis–Menten case.
fn phase_portrait_svg(
    sys: &SinkSystem,
    rtol: f64,
    atol: f64,
    mm_sigma_plus: Option<f64>,
) -> Result<String> {
    let mut canvas = SvgCanvas::new(480.0, 420.0, (0.0, 0.12), (-0.02, 0.12));
    let opts = integrate_opts(rtol.max(1e-9), atol.max(1e-12), 0.5);
    let fan = [
        [0.10, 0.00],
        [0.10, 0.04],
        [0.10, 0.10],
        [0.05, 0.10],
        [0.01, 0.10],
    ];
    for (k, x0) in fan.iter().enumerate() {
        if let Ok(traj) = integrate(sys, x0, 25.0, &opts) {
            let pts: Vec<(f64, f64)> = (0..400)
                .map(|i| {
                    let t = 25.0 * i as f64 / 399.0;
                    let s = traj.eval(t);
                    (s[0], s[1])
                })
                .collect();
            let shade = 40 + k * 30;
            canvas.polyline(&pts, &format!("stroke:rgb({shade},{shade},{shade});stroke-width:1.2"));
        }
    }
    if let Some(sp) = mm_sigma_plus {
        for (f, style, label) in [
            (
                Box::new(move |x: f64| x / (1.0 + x)) as Box<dyn Fn(f64) -> f64>,
                "stroke:#1a5276;stroke-width:1.4;stroke-dasharray:5 3",
                "H(x)",
            ),
            (
                Box::new(move |x: f64| x / (1.0 / sp + x)) as Box<dyn Fn(f64) -> f64>,
                "stroke:#922b21;stroke-width:1.4;stroke-dasharray:2 3",
                "alpha(x)",
            ),
        ] {
            let pts: Vec<(f64, f64)> = (0..200)
                .map(|i| {
                    let x = 0.12 * i as f64 / 199.0;
                    (x, f(x))
                })
                .collect();
            canvas.polyline(&pts, style);
            canvas.text((0.095, f(0.105)), label, "font-size:11px;font-family:monospace");
        }
    }
    canvas.axes("x1", "x2");
    Ok(canvas.finish())
}

