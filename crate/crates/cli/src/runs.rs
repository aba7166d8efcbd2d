//! The seven run kinds. Each produces tables, optional exported files and a
//! list of built-in assertions; a hard failure keeps whatever rows were
//! computed before it.

use std::sync::Arc;

use qedlab_core::assembly::{
    alpha_coupling, assemble_alpha_form, assemble_hamiltonian, dilate_model, CouplingTerms, QedModelSpec,
};
use qedlab_core::expansions::{
    alpha_scan, beta_energy, beta_scan, dense_ground_energy, fd_even_coefficients, fd_step, ir_convergence_study,
    linspace, ratio_radius, rs_coefficients, AlphaScanOptions, BetaScan, PointStatus, Radius, SeriesTerm,
    SolveOptions,
};
use qedlab_core::io::{write_operator, write_vector};
use qedlab_core::scalar::{cx, dot, modulus, Cx};
use qedlab_core::spectral::{
    cauchy_mean, circle_path, dense_spectrum, ground_state, isolation_window, select_points, spectral_scale,
    track_eigenvalue_complex_g, TrackOptions,
};
use qedlab_core::Error;

use crate::cache::Cache;
use crate::config::{LoadedConfig, RunKind};
use crate::record::Assertion;
use crate::table::{Cell, Table};

const ENERGY: &str = "a.u.";
const ONE: &str = "1";

/// Why a run stopped; the variant fixes the exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Capacity(String),
    Solver(String),
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Capacity(_) => 3,
            Failure::Solver(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Capacity(m) | Failure::Solver(m) | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Capacity { .. } => Failure::Capacity(m),
            Error::Convergence { .. } | Error::TrackingLoss { .. } | Error::IllConditionedGap(_) | Error::Fit { .. } => {
                Failure::Solver(m)
            }
            Error::InvalidCutoff { .. }
            | Error::InvalidDiscretization(_)
            | Error::Normalization(_)
            | Error::Domain(_)
            | Error::Data(_)
            | Error::Parse { .. }
            | Error::EmptyGrid(_)
            | Error::SingularDilation => Failure::Config(m),
            Error::Index { .. } | Error::Consistency(_) | Error::NotHermitian(_) | Error::Io(_) => Failure::Other(m),
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Exported (file name, contents).
    pub files: Vec<(String, String)>,
    pub assertions: Vec<Assertion>,
    pub failure: Option<Failure>,
}

impl Outcome {
    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion::new(name, passed, detail));
    }

    fn fail(&mut self, f: impl Into<Failure>) {
        self.failure = Some(f.into());
    }
}

fn solve_options(c: &LoadedConfig) -> SolveOptions<f64> {
    SolveOptions { tol: c.config.tolerance.solver, max_iter: c.config.tolerance.max_iter }
}

fn wants(c: &LoadedConfig, format: &str) -> bool {
    c.config.output.formats.iter().any(|f| f == format)
}

pub fn execute(c: &LoadedConfig, cache: &mut Cache) -> Outcome {
    let mut out = Outcome::default();
    let r = match c.kind {
        RunKind::Ground => ground(c, cache, &mut out),
        RunKind::Series => series(c, cache, &mut out),
        RunKind::IrStudy => ir_study(c, &mut out),
        RunKind::ScalingCheck => scaling_check(c, &mut out),
        RunKind::AlphaScan => alpha_scan_run(c, &mut out),
        RunKind::BetaScan => beta_scan_run(c, &mut out),
        RunKind::ComplexTrack => complex_track(c, &mut out),
    };
    if let Err(f) = r {
        out.fail(f);
    }
    out
}

// summary vector layout of the ground stage
const S_ENERGY: usize = 0;
const S_GAP: usize = 1;
const S_EAT: usize = 2;
const S_OVERLAP: usize = 3;
const S_RESIDUAL: usize = 4;
const S_TRIAL: usize = 5;
const S_SCALE: usize = 6;
const S_DIM: usize = 7;

fn ground(c: &LoadedConfig, cache: &mut Cache, out: &mut Outcome) -> Result<(), Failure> {
    let run = &c.config.run;
    let tol = &c.config.tolerance;
    let cached = match (cache.get_vector("ground-summary"), cache.get_vector("ground-state")) {
        (Some(s), Some(v)) if s.len() == 8 => Some((s, v)),
        _ => None,
    };
    let mut operator_text = None;
    let (summary, state) = match cached {
        Some(hit) => hit,
        None => {
            let model = c.model();
            let factors = model.build()?;
            let spec = QedModelSpec::generic(model, cx(run.g, 0.0), run.beta);
            let h = assemble_hamiltonian(&spec, &factors)?;
            let r = ground_state(&h, tol.solver, tol.max_iter)?;
            let reference = factors.reference_state();
            let trial = dot(&reference, &h.matrix.matvec(&reference)).re;
            let s = vec![
                r.energy,
                cx(r.gap, 0.0),
                cx(factors.atom.e_at(), 0.0),
                cx(modulus(dot(&reference, &r.vector)), 0.0),
                cx(r.residual, 0.0),
                cx(trial, 0.0),
                cx(spectral_scale(&h.matrix), 0.0),
                cx(h.dim() as f64, 0.0),
            ];
            cache.put_operator("hamiltonian", &h.matrix);
            cache.put_vector("ground-state", &r.vector);
            cache.put_vector("ground-summary", &s);
            if wants(c, "operator") {
                operator_text = Some(write_operator(&h.matrix)?);
            }
            (s, r.vector)
        }
    };
    let v = |i: usize| summary[i].re;
    let mut t = Table::new(
        "ground.csv",
        &[
            ("g", ONE),
            ("beta", ONE),
            ("energy", ENERGY),
            ("gap", ENERGY),
            ("e_at", ENERGY),
            ("overlap", ONE),
            ("residual", ENERGY),
            ("trial_energy", ENERGY),
            ("dimension", ONE),
        ],
    );
    t.push(vec![
        run.g.into(),
        run.beta.into(),
        v(S_ENERGY).into(),
        v(S_GAP).into(),
        v(S_EAT).into(),
        v(S_OVERLAP).into(),
        v(S_RESIDUAL).into(),
        v(S_TRIAL).into(),
        (v(S_DIM) as usize).into(),
    ]);
    out.tables.push(t);
    let scale = v(S_SCALE);
    out.check(
        "variational-bound",
        v(S_ENERGY) <= v(S_TRIAL) + tol.solver * scale,
        format!("E = {:e}, trial = {:e}", v(S_ENERGY), v(S_TRIAL)),
    );
    if run.g == 0.0 {
        let de = (v(S_ENERGY) - v(S_EAT)).abs();
        out.check(
            "decoupled-energy",
            de <= tol.decoupling * v(S_EAT).abs().max(1.0),
            format!("|E - e_at| = {de:e}"),
        );
        out.check(
            "decoupled-state",
            v(S_OVERLAP) >= 1.0 - tol.decoupling,
            format!("overlap with the product state = {:.16}", v(S_OVERLAP)),
        );
    }
    if wants(c, "operator") {
        let text = match operator_text {
            Some(t) => t,
            None => match cache.get_operator("hamiltonian") {
                Some(h) => write_operator(&h)?,
                None => {
                    let model = c.model();
                    let factors = model.build()?;
                    let spec = QedModelSpec::generic(model, cx(run.g, 0.0), run.beta);
                    write_operator(&assemble_hamiltonian(&spec, &factors)?.matrix)?
                }
            },
        };
        out.files.push(("hamiltonian.op".into(), text));
    }
    if wants(c, "vector") {
        out.files.push(("ground-state.vec".into(), write_vector(&state)));
    }
    Ok(())
}

fn series(c: &LoadedConfig, cache: &mut Cache, out: &mut Outcome) -> Result<(), Failure> {
    let run = &c.config.run;
    let tol = &c.config.tolerance;
    let order = run.order.unwrap_or(8);
    let cached = match (cache.get_vector("series"), cache.get_vector("series-meta")) {
        (Some(s), Some(m)) if s.len() == order + 1 && m.len() == 3 => Some((s, m)),
        _ => None,
    };
    let (orders, exact, e_at, dim) = match cached {
        Some((s, m)) => {
            let orders: Vec<SeriesTerm<f64>> =
                s.iter().enumerate().map(|(n, z)| SeriesTerm { n, value: z.re, error: z.im }).collect();
            (orders, m[0].re as usize, m[1].re, m[2].re as usize)
        }
        None => {
            let factors = c.model().build()?;
            let terms = CouplingTerms::build(&factors, run.beta)?;
            let s = rs_coefficients(&terms, &factors, order, &solve_options(c))?;
            let exact = s.exact_order.unwrap_or(order);
            let packed: Vec<Cx<f64>> = s.orders.iter().map(|t| cx(t.value, t.error)).collect();
            cache.put_vector("series", &packed);
            cache.put_vector("series-meta", &[cx(exact as f64, 0.0), cx(factors.atom.e_at(), 0.0), cx(factors.dim() as f64, 0.0)]);
            (s.orders, exact, factors.atom.e_at(), factors.dim())
        }
    };
    let kept: Vec<SeriesTerm<f64>> = orders.iter().copied().filter(|t| t.n <= exact).collect();
    let radius = ratio_radius(&kept);
    let mut t = Table::new(
        "series.csv",
        &[("order", ONE), ("coefficient", ENERGY), ("error", ENERGY), ("truncation_exact", ONE)],
    );
    t.note(format!("variable: g at beta = {}", run.beta));
    t.note(format!("dimension: {dim}"));
    t.note(format!("truncation-exact orders: 0..={exact}"));
    t.note(match radius {
        Radius::Finite(r) => format!("radius-estimate: {}", qedlab_core::io::fmt_real(r)),
        Radius::Infinite => "radius-estimate: inf".into(),
    });
    for o in &orders {
        t.push(vec![o.n.into(), o.value.into(), o.error.into(), (if o.n <= exact { "yes" } else { "no" }).into()]);
    }
    out.tables.push(t);
    let e0 = orders[0].value;
    out.check(
        "order-zero-is-e_at",
        (e0 - e_at).abs() <= tol.decoupling * e_at.abs().max(1.0),
        format!("E0 - e_at = {:e}", e0 - e_at),
    );
    let lead = orders.iter().filter(|o| o.n % 2 == 0 && o.n > 0).map(|o| o.value.abs()).fold(0.0, f64::max);
    let odd = orders.iter().filter(|o| o.n % 2 == 1).map(|o| o.value.abs()).fold(0.0, f64::max);
    if order >= 2 {
        out.check("odd-orders-vanish", odd <= 1e-10 * lead, format!("max |odd| = {odd:e}, leading even = {lead:e}"));
    }
    out.check("radius-positive", radius.is_positive(), format!("{radius:?}"));
    if run.fd_check && order >= 4 {
        let factors = c.model().build()?;
        let terms = CouplingTerms::build(&factors, run.beta)?;
        let h0 = terms.unperturbed()?;
        let (e2, e4) = fd_even_coefficients(|g| dense_ground_energy(&terms.hamiltonian(cx(g, 0.0))?), fd_step(&h0))?;
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        let (r2, r4) = (orders[2].value, orders[4].value);
        out.check("fd-order-2", rel(e2, r2) <= tol.fd, format!("fd {e2:e} vs rs {r2:e}"));
        out.check("fd-order-4", rel(e4, r4) <= tol.fd, format!("fd {e4:e} vs rs {r4:e}"));
    }
    Ok(())
}

fn ir_study(c: &LoadedConfig, out: &mut Outcome) -> Result<(), Failure> {
    let run = &c.config.run;
    let order = run.order.unwrap_or(2);
    let study = ir_convergence_study(&c.model(), run.beta, &run.ladder, order, &solve_options(c))?;
    let mut t = Table::new(
        "ir-study.csv",
        &[("epsilon", "k"), ("modes", ONE), ("order", ONE), ("coefficient", ENERGY), ("increment", ENERGY)],
    );
    for o in &study.orders {
        for (i, &eps) in study.ladder.iter().enumerate() {
            let inc = if i == 0 { f64::NAN } else { o.increments[i - 1] };
            t.push(vec![eps.into(), study.n_modes[i].into(), o.order.into(), o.values[i].into(), inc.into()]);
        }
    }
    out.tables.push(t);
    let mut v = Table::new("ir-verdicts.csv", &[("order", ONE), ("monotone", ONE), ("verdict", ONE)]);
    for o in &study.orders {
        v.push(vec![o.order.into(), (if o.monotone { "yes" } else { "no" }).into(), o.verdict.as_str().into()]);
    }
    out.tables.push(v);
    for &n in &run.require_convergent {
        match study.order(n) {
            Some(o) => out.check(
                &format!("order-{n}-convergent"),
                o.verdict == qedlab_core::expansions::Verdict::Convergent,
                format!("increments {:?}", o.increments),
            ),
            None => out.check(&format!("order-{n}-convergent"), false, "order not computed"),
        }
    }
    Ok(())
}

fn scaling_check(c: &LoadedConfig, out: &mut Outcome) -> Result<(), Failure> {
    let model = c.model();
    let factors = model.build()?;
    let tol = c.config.tolerance.scaling;
    let mut t = Table::new(
        "scaling-check.csv",
        &[
            ("alpha", ONE),
            ("index", ONE),
            ("lambda", ENERGY),
            ("alpha2_lambda", ENERGY),
            ("lambda_dilated", ENERGY),
            ("relative_deviation", ONE),
        ],
    );
    let mut result = Ok(());
    for &alpha in &c.config.run.alphas {
        let step = (|| -> Result<(), Failure> {
            let spec = QedModelSpec::alpha_form(model.clone(), alpha)?;
            let h = assemble_hamiltonian(&spec, &factors)?;
            let generic = QedModelSpec::generic(model.clone(), cx(alpha_coupling(alpha), 0.0), alpha);
            let same = assemble_alpha_form(alpha, &model, &factors)?.matrix.same_entries(&assemble_hamiltonian(&generic, &factors)?.matrix);
            out.check(&format!("delegation-alpha-{alpha}"), same, "alpha form against g = alpha^(3/2), beta = alpha");
            let (tilde, map) = dilate_model(&spec, alpha)?;
            let ht = assemble_hamiltonian(&tilde, &tilde.model.build()?)?;
            if ht.dim() != h.dim() {
                return Err(Failure::Other(format!("dilated dimension {} differs from {}", ht.dim(), h.dim())));
            }
            let a = dense_spectrum(&h.matrix, h.dim(), false)?.real_values();
            let b = dense_spectrum(&ht.matrix, ht.dim(), false)?.real_values();
            let floor = 1e-8 * spectral_scale(&h.matrix) * map.energy_scale;
            let mut worst: f64 = 0.0;
            for (i, (x, y)) in a.iter().zip(&b).enumerate() {
                let target = map.energy_scale * x;
                let dev = (y - target).abs() / target.abs().max(floor);
                worst = worst.max(dev);
                t.push(vec![alpha.into(), i.into(), (*x).into(), target.into(), (*y).into(), dev.into()]);
            }
            out.check(&format!("dilation-alpha-{alpha}"), worst <= tol, format!("max relative deviation {worst:e}"));
            Ok(())
        })();
        if let Err(f) = step {
            result = Err(f);
            break;
        }
    }
    out.tables.push(t);
    result
}

fn alpha_grid(c: &LoadedConfig) -> Vec<f64> {
    let r = &c.config.run;
    let n = r.points.unwrap_or(10);
    if r.spacing == "log" {
        linspace(r.alpha_min.ln(), r.alpha_max.ln(), n).into_iter().map(f64::exp).collect()
    } else {
        linspace(r.alpha_min, r.alpha_max, n)
    }
}

fn alpha_scan_run(c: &LoadedConfig, out: &mut Outcome) -> Result<(), Failure> {
    let tol = &c.config.tolerance;
    let factors = c.model().build()?;
    let opts = AlphaScanOptions {
        solve: solve_options(c),
        rs_order: c.config.run.rs_order,
        gap_fraction: tol.gap_fraction,
        min_overlap: tol.min_overlap,
        fit_degree: 2,
    };
    let alphas = alpha_grid(c);
    let scan = alpha_scan(&factors, &alphas, &opts)?;
    let n_coef = c.config.run.rs_order / 2;
    let mut cols: Vec<(String, &str)> = vec![
        ("alpha".into(), ONE),
        ("g".into(), ONE),
        ("energy".into(), ENERGY),
        ("delta_energy".into(), ENERGY),
        ("gap".into(), ENERGY),
        ("overlap".into(), ONE),
        ("residual".into(), ENERGY),
    ];
    for k in 1..=n_coef {
        cols.push((format!("e{}_alpha", 2 * k), ENERGY));
    }
    cols.push(("status".into(), ""));
    let col_refs: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), *b)).collect();
    let mut t = Table::new("alpha-scan.csv", &col_refs);
    t.note(format!("e0: {}", qedlab_core::io::fmt_real(scan.e0)));
    t.note(format!("gap0: {}", qedlab_core::io::fmt_real(scan.gap0)));
    if let Some(s) = scan.slope {
        t.note(format!("log-log-slope: {}", qedlab_core::io::fmt_real(s)));
    }
    if let Some(f) = &scan.fit {
        let cs: Vec<String> = f.orders.iter().map(|o| format!("{}:{}", o.n, qedlab_core::io::fmt_real(o.value))).collect();
        t.note(format!("even-fit in alpha^(3/2) (order:coefficient): {}", cs.join(" ")));
    }
    for (k, d) in scan.derivative_sup.iter().enumerate() {
        t.note(format!("sup |d/dalpha e{}_alpha|: {}", 2 * (k + 1), qedlab_core::io::fmt_real(*d)));
    }
    for r in &scan.rows {
        let mut row: Vec<Cell> = vec![
            r.alpha.into(),
            alpha_coupling(r.alpha).into(),
            r.energy.into(),
            (r.energy - scan.e0).into(),
            r.gap.into(),
            r.overlap.into(),
            r.residual.into(),
        ];
        for k in 0..n_coef {
            row.push(r.coefficients.get(k).copied().unwrap_or(f64::NAN).into());
        }
        row.push(match &r.status {
            PointStatus::Ok => "ok".into(),
            PointStatus::Failed(m) => format!("failed: {m}").into(),
        });
        t.push(row);
    }
    out.tables.push(t);
    match scan.slope {
        Some(s) => out.check("leading-order-slope", (s - 3.0).abs() <= tol.slope, format!("slope {s}")),
        None => out.check("leading-order-slope", false, "fewer than two usable points"),
    }
    match &scan.log_test {
        Some(l) => out.check(
            "no-log-term",
            !l.violation,
            format!("rss {:e} -> {:e}, log coefficient {:e} +- {:e}", l.rss_baseline, l.rss_log, l.log_coefficient, l.log_stderr),
        ),
        None => out.check("no-log-term", false, "needs at least 6 positive points"),
    }
    if !scan.complete {
        let first = scan.rows.iter().find(|r| !r.status.is_ok()).map(|r| r.alpha).unwrap_or(f64::NAN);
        return Err(Failure::Solver(format!("alpha-scan left the isolation window at alpha = {first}")));
    }
    Ok(())
}

fn beta_table(name: &str, scan: &BetaScan<f64>, order: usize) -> Table {
    let mut cols = vec![("beta", ONE), ("energy", ENERGY)];
    let names = ["d_energy_d_beta", "d2_energy_d_beta2"];
    for n in names.iter().take(order) {
        cols.push((n, ENERGY));
    }
    cols.push(("status", ""));
    let mut t = Table::new(name, &cols);
    for (s, v) in scan.sup.iter().enumerate() {
        t.note(format!("sup-order-{s}: {}", qedlab_core::io::fmt_real(*v)));
    }
    if let Some(p) = scan.parity_defect {
        t.note(format!("parity-defect: {}", qedlab_core::io::fmt_real(p)));
    }
    for (i, &b) in scan.betas.iter().enumerate() {
        let mut row: Vec<Cell> = vec![b.into(), scan.energies[i].into()];
        for d in &scan.derivatives {
            row.push(d[i].into());
        }
        row.push(match &scan.status[i] {
            PointStatus::Ok => "ok".into(),
            PointStatus::Failed(m) => format!("failed: {m}").into(),
        });
        t.push(row);
    }
    t
}

fn beta_scan_run(c: &LoadedConfig, out: &mut Outcome) -> Result<(), Failure> {
    let run = &c.config.run;
    let tol = &c.config.tolerance;
    let factors = c.model().build()?;
    let opts = solve_options(c);
    let energy = |b: f64| beta_energy(&factors, run.g, b, &opts);
    let n = run.points.unwrap_or(401);
    let order = run.derivative_order;
    let coarse = beta_scan(energy, &linspace(run.beta_min, run.beta_max, n), order)?;
    let fine = beta_scan(energy, &linspace(run.beta_min, run.beta_max, 2 * n - 1), order)?;
    out.tables.push(beta_table("beta-scan.csv", &coarse, order));
    out.tables.push(beta_table("beta-scan-refined.csv", &fine, order));
    if !(coarse.complete() && fine.complete()) {
        return Err(Failure::Solver("beta-scan has failed points".into()));
    }
    for s in 0..=order {
        let (a, b) = (coarse.sup[s], fine.sup[s]);
        out.check(&format!("sup-order-{s}-finite"), a.is_finite() && b.is_finite(), format!("{a:e}, refined {b:e}"));
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        out.check(
            &format!("sup-order-{s}-refinement-stable"),
            rel <= tol.refinement || (a - b).abs() <= tol.solver.sqrt(),
            format!("relative change {rel:e}"),
        );
    }
    if c.potential_is_symmetric() {
        if let Some(p) = coarse.parity_defect {
            let bound = tol.parity * coarse.sup[0].max(1.0);
            out.check("parity", p <= bound, format!("max |E(beta) - E(-beta)| = {p:e}"));
        }
    }
    Ok(())
}

/// Series order used to bound the tracking window.
const SERIES_ORDER_FOR_WINDOW: usize = 8;

fn complex_track(c: &LoadedConfig, out: &mut Outcome) -> Result<(), Failure> {
    let run = &c.config.run;
    let tol = &c.config.tolerance;
    let factors = c.model().build()?;
    let terms = Arc::new(CouplingTerms::build(&factors, run.beta)?);
    let start = factors.reference_state();
    let e_at = factors.atom.e_at();
    let window = isolation_window(
        |g| terms.hamiltonian(cx(g, 0.0)),
        &start,
        run.window_max,
        run.window_points,
        tol.solver,
        tol.max_iter,
    )?;
    // the real-axis gap says nothing about singularities off the axis, so the
    // window is also capped by the ratio estimate of the series radius
    let series = rs_coefficients(&terms, &factors, SERIES_ORDER_FOR_WINDOW, &solve_options(c))?;
    let exact = series.exact_order.unwrap_or(SERIES_ORDER_FOR_WINDOW);
    let kept: Vec<SeriesTerm<f64>> = series.orders.iter().copied().filter(|t| t.n <= exact).collect();
    let real_window = window;
    let window = match ratio_radius(&kept) {
        Radius::Finite(r) if r > 0.0 => window.min(r),
        _ => window,
    };
    let rho = match run.rho {
        Some(r) => r,
        None if window > 0.0 => 0.5 * window,
        None => return Err(Failure::Solver(format!("no isolation window below g = {}", run.window_max))),
    };
    out.check("rho-inside-window", rho <= window, format!("rho {rho}, window {window}"));
    let (mut path, range) = circle_path(rho, run.radial_steps, run.n_circle);
    // back to the real axis: the tracked energy must return to its start
    path.push(cx(rho, 0.0));
    let opts = TrackOptions { isolation_factor: tol.isolation_factor, ..TrackOptions::default() };
    let track = track_eigenvalue_complex_g(|g| terms.hamiltonian(g), &path, &start, &opts);
    let mut t = Table::new(
        "complex-track.csv",
        &[
            ("g_re", ONE),
            ("g_im", ONE),
            ("energy_re", ENERGY),
            ("energy_im", ENERGY),
            ("isolation", ONE),
            ("residual", ENERGY),
            ("on_circle", ONE),
        ],
    );
    t.note(format!("real-axis-window: {}", qedlab_core::io::fmt_real(real_window)));
    t.note(format!("isolation-window: {}", qedlab_core::io::fmt_real(window)));
    t.note(format!("rho: {}", qedlab_core::io::fmt_real(rho)));
    t.note(format!("e_at: {}", qedlab_core::io::fmt_real(e_at)));
    let circle = &path[range.clone()];
    for p in &track.points {
        let on = circle.contains(&p.g);
        t.push(vec![
            p.g.re.into(),
            p.g.im.into(),
            p.energy.re.into(),
            p.energy.im.into(),
            p.isolation.into(),
            p.residual.into(),
            (if on { "yes" } else { "no" }).into(),
        ]);
    }
    if let Some(e) = track.error {
        out.tables.push(t);
        return Err(e.into());
    }
    let first = select_points(&track.points, &path[range.start..=range.start])
        .ok_or_else(|| Failure::Other("circle start missing from the track".into()))?;
    let last = track.points.last().ok_or_else(|| Failure::Other("empty track".into()))?;
    let closure = modulus(last.energy - first[0].energy);
    out.check("loop-closure", closure <= tol.cauchy, format!("|E(end) - E(start)| = {closure:e} at g = {rho}"));
    let samples = select_points(&track.points, circle)
        .ok_or_else(|| Failure::Other("circle samples missing from the track".into()))?;
    let energies: Vec<Cx<f64>> = samples.iter().map(|p| p.energy).collect();
    let mean = cauchy_mean(&energies);
    t.note(format!("cauchy-mean: {} {}", qedlab_core::io::fmt_real(mean.re), qedlab_core::io::fmt_real(mean.im)));
    out.tables.push(t);
    let dev = modulus(mean - cx(e_at, 0.0));
    out.check("cauchy-reconstruction", dev <= tol.cauchy, format!("|mean - e_at| = {dev:e}"));
    let n = samples.len();
    let j = (n / 4).max(1);
    let (p, q) = (&samples[j].projection, &samples[n - j].projection);
    let d = p.adjoint().frobenius_distance(q);
    out.check(
        "conjugate-projection",
        d <= tol.conjugate,
        format!("||P(g)^dagger - P(conj g)|| = {d:e} at g = {} {:+}i", samples[j].g.re, samples[j].g.im),
    );
    let worst_trace = samples.iter().map(|s| modulus(s.projection.trace() - cx(1.0, 0.0))).fold(0.0, f64::max);
    out.check("projection-trace", worst_trace <= 1e-10, format!("max |tr P - 1| = {worst_trace:e}"));
    Ok(())
}
