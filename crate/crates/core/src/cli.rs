//! Command dispatch for the `cgo` binary.
//!
//! Each command writes its CSV files plus `summary.csv` (quantity, value,
//! threshold, status) into the output directory.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cgo::{build_correction, build_u, cgo_residual, eikonal_coefficient, unscale, CgoParams, DEFAULT_TAU0};
use crate::config::{potential_of, BlobSpec, Mode, RunConfig};
use crate::error::{Error, Result};
use crate::forward::{
    assemble, carleman_ratio, domain_grid, dtn_apply, nullspace_check, random_zero_trace_field, BoundaryData,
};
use crate::geometry::{convex_hull, ConvexPolygon, CylinderDomain, RigidMotion};
use crate::numerics::{fit_slope, loglog_slope, Axis, ComplexField2, ComplexField3, Field2, Grid2, Grid3};
use crate::phase::{
    eval_amplitude_a0, eval_phase, fd_laplacian, AmplitudeOptions, AmplitudePair, Branch, PhaseField, RayProfile,
};
use crate::pipeline::{
    gamma_grid, identity_sweep, moment_limit_check, reconstruct, reconstruct_blind, BlindOptions, DtnOracle,
    IdentitySetup, ReconstructionOptions, Scene,
};
use crate::radon::{ert_invert_full, sinogram, support_verify};
use crate::report::{emit_report, Cell, Series};
use crate::C64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Files written by a command and its summary table.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Series,
}

impl Outcome {
    /// True unless some summary row failed its threshold.
    pub fn all_pass(&self) -> bool {
        let s = self.summary.columns.iter().position(|c| c == "status").unwrap_or(3);
        self.summary.rows.iter().all(|r| r[s] != Cell::Text("fail".into()))
    }
}

pub fn exit_code(r: &Result<Outcome>) -> i32 {
    match r {
        Ok(_) => EXIT_OK,
        Err(e) if e.is_numerical() => EXIT_NUMERICAL,
        Err(_) => EXIT_VALIDATION,
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
    summary: Series,
}

impl Writer {
    fn new(dir: &Path) -> Self {
        Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            summary: Series::new(&["quantity", "value", "threshold", "status"]),
        }
    }

    fn emit(&mut self, name: &str, s: &Series) -> Result<()> {
        let p = self.dir.join(name);
        emit_report(s, &p)?;
        self.files.push(p);
        Ok(())
    }

    /// Row passing when `value ≤ threshold`.
    fn at_most(&mut self, q: &str, value: f64, threshold: f64) {
        self.summary.push(vec![
            q.into(),
            value.into(),
            threshold.into(),
            (value <= threshold).into(),
        ]);
    }

    fn at_least(&mut self, q: &str, value: f64, threshold: f64) {
        self.summary.push(vec![
            q.into(),
            value.into(),
            threshold.into(),
            (value >= threshold).into(),
        ]);
    }

    fn info(&mut self, q: &str, value: f64) {
        self.summary
            .push(vec![q.into(), value.into(), f64::NAN.into(), "info".into()]);
    }

    fn note(&mut self, q: &str, text: &str) {
        self.summary
            .push(vec![q.into(), f64::NAN.into(), f64::NAN.into(), text.into()]);
    }

    fn finish(mut self) -> Result<Outcome> {
        let s = self.summary.clone();
        self.emit("summary.csv", &s)?;
        Ok(Outcome {
            files: self.files,
            summary: self.summary,
        })
    }
}

/// Runs `command` with `cfg`, writing into `out`.
pub fn run(command: &str, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let mut w = Writer::new(out);
    match command {
        "eikonal" => eikonal(cfg, &mut w)?,
        "amplitude" => amplitude(cfg, &mut w)?,
        "cgo-residual" => residual(cfg, &mut w)?,
        "forward" => forward(cfg, &mut w)?,
        "carleman" => carleman(cfg, &mut w)?,
        "identity" => identity(cfg, &mut w)?,
        "moments" => moments(cfg, &mut w)?,
        "radon" => radon(cfg, &mut w)?,
        "support" => support(cfg, &mut w)?,
        "reconstruct" => reconstruction(cfg, &mut w)?,
        other => {
            return Err(Error::Config(format!(
                "unknown command {other:?}; expected one of {}",
                crate::config::COMMANDS.join(", ")
            )))
        }
    }
    let text = cfg.to_toml()?;
    std::fs::write(out.join("config.toml"), text)?;
    w.finish()
}

/// [−ε, ε] × [0, K] in ray coordinates.
fn strip_grid(cfg: &RunConfig, n: usize) -> Grid2 {
    let p = &cfg.phase;
    Grid2::new(Axis::new(-p.epsilon, p.epsilon, n), Axis::new(0.0, p.height_k, n))
}

fn fields(cfg: &RunConfig, grid: Grid2) -> Result<(PhaseField, AmplitudePair)> {
    let bp = cfg.phase.boundary_phase()?;
    let eps = cfg.phase.epsilon;
    let ph = PhaseField::on_grid(grid, &RigidMotion::identity(), &bp, Branch::Direct);
    let amps = AmplitudePair::on_grid(
        &ph,
        RayProfile::Smooth { epsilon: eps },
        eps,
        &AmplitudeOptions::default(),
    )?;
    Ok((ph, amps))
}

fn eikonal(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let bp = cfg.phase.boundary_phase()?;
    let g = strip_grid(cfg, cfg.eikonal.nodes);
    let ph = PhaseField::on_grid(g, &RigidMotion::identity(), &bp, Branch::Direct);
    let mut s = Series::new(&["x1", "x2", "psi"]);
    let mut flat: f64 = 0.0;
    for (idx, psi) in ph.psi.values.iter().enumerate() {
        let (i, j) = g.unindex(idx);
        let x = g.point(i, j);
        flat = flat.max((psi - x[1]).abs());
        s.push(vec![x[0].into(), x[1].into(), (*psi).into()]);
    }
    w.emit("eikonal.csv", &s)?;
    let caustics = ph.caustic_mask.values.iter().filter(|m| **m).count();
    w.info("caustic_nodes", caustics as f64);
    if cfg.phase.kappa == 0.0 {
        w.at_most("max_abs_psi_minus_x2", flat, cfg.tolerances.eikonal);
    } else {
        w.info("max_abs_psi_minus_x2", flat);
    }
    Ok(())
}

fn amplitude(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let bp = cfg.phase.boundary_phase()?;
    let a = &cfg.amplitude;
    let (ph, amps) = fields(cfg, strip_grid(cfg, a.nodes))?;
    let g = ph.grid();
    let mut s = Series::new(&["x1", "x2", "a0", "a", "lap_psi"]);
    for idx in 0..g.len() {
        let (i, j) = g.unindex(idx);
        let x = g.point(i, j);
        s.push(vec![
            x[0].into(),
            x[1].into(),
            amps.a0.values[idx].into(),
            amps.a.values[idx].into(),
            ph.lap_psi.values[idx].into(),
        ]);
    }
    w.emit("amplitude.csv", &s)?;

    let t = a.axis_point;
    let slope = bp.alpha_prime(0.0);
    let exact = slope / (1.0 + t * slope);
    let mut axis = Series::new(&["h", "lap_fd", "exact", "error"]);
    let mut errors = Vec::new();
    let mut steps = a.fd_steps.clone();
    steps.sort_by(|x, y| y.total_cmp(x));
    for &h in &steps {
        let lap = fd_laplacian(&mut |x| eval_phase(x, &bp, Branch::Direct), [0.0, t], h, false)?;
        errors.push((lap - exact).abs());
        axis.push(vec![h.into(), lap.into(), exact.into(), (lap - exact).abs().into()]);
    }
    w.emit("axis.csv", &axis)?;
    if steps.len() >= 2 && errors.iter().all(|e| *e > 0.0) {
        w.at_least("axis_laplacian_order", loglog_slope(&steps, &errors), 1.8);
    }
    let a0 = eval_amplitude_a0([0.0, t], &bp, Branch::Direct)?;
    w.at_most("axis_a0_error", (a0 - 1.0 / (1.0 + t * slope).sqrt()).abs(), 1e-6);
    Ok(())
}

fn demodulated(r: &ComplexField3, ph: &PhaseField, p: &CgoParams) -> Vec<C64> {
    let plane = ph.grid().len();
    r.values
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let psi = ph.psi.values[n % plane];
            if psi.is_finite() {
                v * (-C64::i() * p.k() * psi).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn residual(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let r = &cfg.residual;
    let d = cfg.geometry.domain()?;
    let q = potential_of(&r.q);
    let g = domain_grid(&d, r.grid);
    let (ph, amps) = fields(cfg, g.cross_section())?;
    let qs = q.sample(g);
    let mut first: Option<Vec<C64>> = None;
    let mut s = Series::new(&["tau", "max_abs", "rel_diff_to_first"]);
    let mut worst: f64 = 0.0;
    let mut taus = r.taus.clone();
    taus.sort_by(f64::total_cmp);
    for &tau in &taus {
        let p = CgoParams::new(tau, C64::new(0.0, 0.0), DEFAULT_TAU0)?;
        let res = demodulated(&cgo_residual(g, &qs, &ph, &amps, &p)?, &ph, &p);
        let size = res.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let rel = match &first {
            None => {
                first = Some(res);
                0.0
            }
            Some(f) => {
                let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
                f.iter().zip(&res).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
            }
        };
        worst = worst.max(rel);
        s.push(vec![tau.into(), size.into(), rel.into()]);
    }
    w.emit("residual.csv", &s)?;
    w.at_most("scaled_residual_tau_spread", worst, cfg.tolerances.residual_rel);
    let e = eikonal_coefficient(&ph, &amps)?;
    let h = g.spacing()[0].max(g.spacing()[1]);
    w.at_most(
        "eikonal_coefficient_max",
        e.values.iter().cloned().fold(0.0, f64::max),
        10.0 * h * h,
    );

    let gc = domain_grid(&d, r.correction_grid);
    let (ph, amps) = fields(cfg, gc.cross_section())?;
    let qs = q.sample(gc);
    let vol = gc.cell_volume();
    let mut c = Series::new(&["tau", "tau_l2_norm", "ratio_to_previous"]);
    let mut prev: Option<f64> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut taus = r.correction_taus.clone();
    taus.sort_by(f64::total_cmp);
    for &tau in &taus {
        let p = CgoParams::new(tau, C64::new(0.0, 0.0), DEFAULT_TAU0)?;
        let u = build_u(gc, &ph, &amps, &p)?;
        let corr = build_correction(&d, &qs, &u, tau)?;
        let v = corr.u_cor.l2_norm() * vol.sqrt() * tau;
        let ratio = prev.map_or(f64::NAN, |p| v / p);
        if ratio.is_finite() {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        prev = Some(v);
        c.push(vec![tau.into(), v.into(), ratio.into()]);
    }
    w.emit("correction.csv", &c)?;
    if lo.is_finite() {
        w.at_least("correction_ratio_min", lo, 0.3);
        w.at_most("correction_ratio_max", hi, 1.7);
    }
    Ok(())
}

fn forward(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let f = &cfg.forward;
    let d = cfg.geometry.domain()?;
    let g = domain_grid(&d, f.grid);
    let q1 = potential_of(&cfg.potentials.q1).sample(g);
    let q2 = potential_of(&cfg.potentials.q2).sample(g);
    let op1 = assemble(&d, &q1, g)?;
    let op2 = assemble(&d, &q2, g)?;
    for (name, op) in [("q1", &op1), ("q2", &op2)] {
        let n = nullspace_check(op);
        w.summary.push(vec![
            format!("{name}_sigma_min").into(),
            n.sigma_min.into(),
            n.threshold.into(),
            (n.pass).into(),
        ]);
    }
    let (ph, amps) = fields(cfg, g.cross_section())?;
    let p = CgoParams::new(f.tau, C64::new(0.0, 0.0), DEFAULT_TAU0)?;
    let u = unscale(&build_u(g, &ph, &amps, &p)?, f.tau)?;
    let data = BoundaryData::trace_of(&op1, &u);
    let t1 = dtn_apply(&op1, &data)?;
    let t2 = dtn_apply(&op2, &data)?;
    let mut s = Series::new(&[
        "x1", "x2", "x3", "axis", "outward", "re_q1", "im_q1", "re_q2", "im_q2", "abs_diff",
    ]);
    for (a, b) in t1.entries.iter().zip(&t2.entries) {
        let (i, j, k) = g.unindex(a.node);
        let x = g.point(i, j, k);
        s.push(vec![
            x[0].into(),
            x[1].into(),
            x[2].into(),
            a.axis.into(),
            a.outward.into(),
            a.value.re.into(),
            a.value.im.into(),
            b.value.re.into(),
            b.value.im.into(),
            (a.value - b.value).norm().into(),
        ]);
    }
    w.emit("dtn.csv", &s)?;
    w.info("dtn_max_abs_q1", t1.max_abs());
    w.info("dtn_max_diff", t1.max_diff(&t2));
    Ok(())
}

fn carleman(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let c = &cfg.carleman;
    let d = cfg.geometry.domain()?;
    let g = domain_grid(&d, c.grid);
    let op = assemble(&d, &potential_of(&cfg.potentials.q1).sample(g), g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut taus = c.taus.clone();
    taus.sort_by(f64::total_cmp);
    let mut s = Series::new(&["field", "tau", "ratio"]);
    let mut slopes = Series::new(&["field", "slope"]);
    let (mut worst, mut finite) = (f64::NEG_INFINITY, true);
    for field in 0..c.fields {
        let u = random_zero_trace_field(&op, &d, &mut rng, c.bumps);
        let ratios = taus
            .iter()
            .map(|&t| carleman_ratio(&op, &u, t))
            .collect::<Result<Vec<_>>>()?;
        for (t, r) in taus.iter().zip(&ratios) {
            finite &= r.is_finite();
            s.push(vec![field.into(), (*t).into(), (*r).into()]);
        }
        let slope = if taus.len() > 1 { fit_slope(&taus, &ratios) } else { 0.0 };
        worst = worst.max(slope);
        slopes.push(vec![field.into(), slope.into()]);
    }
    w.emit("carleman.csv", &s)?;
    w.emit("carleman_slopes.csv", &slopes)?;
    w.summary.push(vec![
        "ratios_finite".into(),
        f64::NAN.into(),
        f64::NAN.into(),
        finite.into(),
    ]);
    w.at_most("max_slope", worst, cfg.tolerances.carleman_slope);
    Ok(())
}

fn identity(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let i = &cfg.identity;
    let d = cfg.geometry.domain()?;
    let g = domain_grid(&d, i.grid);
    let (ph, amps) = fields(cfg, g.cross_section())?;
    let q1 = potential_of(&cfg.potentials.q1).sample(g);
    let q2 = potential_of(&cfg.potentials.q2).sample(g);
    let setup = IdentitySetup {
        domain: &d,
        q1: &q1,
        q2: &q2,
        phase: &ph,
        amps: &amps,
        n: cfg.n_identity(),
        tau0: i.tau0,
        localization: i.localization.into(),
    };
    let r = identity_sweep(&setup, &i.taus, i.boundary)?;
    let mut s = Series::new(&["tau", "re_I", "im_I", "re_B", "im_B", "abs_I_minus_P"]);
    let mut green: f64 = 0.0;
    for ((t, v), (b, gap)) in r.taus.iter().zip(&r.volume).zip(r.boundary.iter().zip(r.gaps())) {
        let bv = b.as_ref().map_or(C64::new(f64::NAN, f64::NAN), |b| b.total);
        if b.is_some() {
            green = green.max((bv - v).norm() / v.norm().max(f64::MIN_POSITIVE));
        }
        s.push(vec![
            (*t).into(),
            v.re.into(),
            v.im.into(),
            bv.re.into(),
            bv.im.into(),
            gap.into(),
        ]);
    }
    w.emit("identity.csv", &s)?;
    w.info("principal_re", r.principal.re);
    w.info("principal_im", r.principal.im);
    w.at_most("gap_slope", r.slope, cfg.tolerances.identity_slope);
    if i.boundary {
        w.at_most("boundary_volume_rel_diff", green, cfg.tolerances.green_rel);
    }
    Ok(())
}

fn moments(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let m = &cfg.moments;
    let bp = cfg.phase.boundary_phase()?;
    let scene = Scene {
        domain: cfg.geometry.domain()?,
        q1: potential_of(&cfg.potentials.q1),
        q2: potential_of(&cfg.potentials.q2),
    };
    let n = C64::new(m.n[0], m.n[1]);
    let moment = |x: [f64; 2]| scene.moment(x, n);
    let r = moment_limit_check(&moment, &RigidMotion::identity(), &bp, n, &m.h_values)?;
    let mut s = Series::new(&["h", "re_A", "im_A", "error", "axis_weight_error"]);
    for (((h, a), e), aw) in r
        .h_values
        .iter()
        .zip(&r.averages)
        .zip(&r.errors)
        .zip(&r.axis_weight_errors)
    {
        s.push(vec![(*h).into(), a.re.into(), a.im.into(), (*e).into(), (*aw).into()]);
    }
    s.sort_by_column("h");
    w.emit("moments.csv", &s)?;
    w.info("target_re", r.target.re);
    w.info("target_im", r.target.im);
    w.at_least("order", r.order, cfg.tolerances.moment_order);
    Ok(())
}

fn planar(blobs: &[BlobSpec], x: [f64; 2]) -> C64 {
    blobs.iter().map(|b| b.eval(x)).sum()
}

fn square_grid(n: usize) -> Grid2 {
    Grid2::new(Axis::new(-1.0, 1.0, n), Axis::new(-1.0, 1.0, n))
}

fn rel_l2(a: &ComplexField2, b: &ComplexField2) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.values.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

fn radon(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let r = &cfg.radon;
    let g = square_grid(r.nodes);
    let f = Field2::from_fn(g, |x| planar(&r.phantom, x));
    let mut s = Series::new(&["mu", "rel_error"]);
    for &mu in &r.mus {
        let sino = sinogram(&f, mu, r.angles, r.offsets, &ConvexPolygon::empty());
        let back = ert_invert_full(&sino, g)?;
        let err = rel_l2(&back, &f);
        s.push(vec![mu.into(), err.into()]);
        w.at_most(&format!("rel_error_mu_{mu}"), err, cfg.tolerances.radon_rel);
    }
    s.sort_by_column("mu");
    w.emit("radon.csv", &s)?;
    Ok(())
}

fn support(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let c = &cfg.support;
    let t = &cfg.tolerances;
    let g = square_grid(c.nodes);
    let h = c.set_half_width;
    let e = convex_hull(&[[-h, -h], [h, -h], [h, h], [-h, h]]);
    let inside = Field2::from_fn(g, |x| planar(&c.inside, x));
    let both = Field2::from_fn(g, |x| planar(&c.inside, x) + planar(&c.exterior, x));
    let r_in = support_verify(&inside, c.mu, &e, t.support_clear)?;
    let r_out = support_verify(&both, c.mu, &e, t.support_detect)?;
    let mut s = Series::new(&["case", "masked_max", "masked_lines", "exterior_max"]);
    for (name, r) in [("inside", &r_in), ("exterior", &r_out)] {
        s.push(vec![
            name.into(),
            r.masked_max.into(),
            r.masked_lines.into(),
            r.exterior_max.into(),
        ]);
    }
    w.emit("support.csv", &s)?;
    w.at_most("inside_masked_max", r_in.masked_max, t.support_clear);
    w.summary.push(vec![
        "exterior_masked_max".into(),
        r_out.masked_max.into(),
        t.support_detect.into(),
        (r_out.masked_max > t.support_detect).into(),
    ]);
    Ok(())
}

fn reconstruction(cfg: &RunConfig, w: &mut Writer) -> Result<()> {
    let rc = &cfg.reconstruct;
    let domain: CylinderDomain = rc.geometry.domain()?;
    let opts = ReconstructionOptions {
        gammas: gamma_grid(rc.gamma_points, rc.gamma_max),
        section_nodes: rc.section_nodes,
        angles: rc.angles,
        offsets: rc.offsets,
        radon_reg: rc.radon_reg,
        x3_ridge: rc.x3_ridge,
        x3_nodes: rc.x3_nodes,
        basis: rc.basis(),
        feature_width: None,
        noise_rel: rc.noise_rel,
    };
    let scene = Scene {
        domain: domain.clone(),
        q1: potential_of(&rc.potentials.q1),
        q2: potential_of(&rc.potentials.q2),
    };
    let truth = |x: [f64; 3]| scene.diff(x);
    let r = match cfg.mode {
        Mode::Synthetic => reconstruct(&scene, &opts)?,
        Mode::Blind => {
            let g: Grid3 = domain_grid(&domain, rc.blind_grid);
            let q1 = scene.q1.sample(g);
            let oracle = DtnOracle::new(&domain, &scene.q2.sample(g))?;
            let blind = BlindOptions {
                bp: cfg.phase.boundary_phase()?,
                profile_width: rc.profile_width,
                taus: rc.blind_taus.clone(),
                tau0: DEFAULT_TAU0,
            };
            reconstruct_blind(&domain, &q1, &oracle, &opts, &blind, Some(&truth))?
        }
    };
    let g = r.field.grid;
    let plane = g.x1.n * g.x2.n;
    let mut s = Series::new(&["x1", "x2", "x3", "re", "im", "re_truth", "im_truth"]);
    for (n, v) in r.field.values.iter().enumerate() {
        if !r.region.values[n % plane] {
            continue;
        }
        let (i, j, k) = g.unindex(n);
        let x = g.point(i, j, k);
        let t = truth(x);
        s.push(vec![
            x[0].into(),
            x[1].into(),
            x[2].into(),
            v.re.into(),
            v.im.into(),
            t.re.into(),
            t.im.into(),
        ]);
    }
    w.emit("reconstruction.csv", &s)?;
    let rep = &r.report;
    let mut e = Series::new(&["quantity", "value"]);
    let rel = rep.rel_error.unwrap_or(f64::NAN);
    for (q, v) in [
        ("rel_error", rel),
        ("max_abs", rep.max_abs),
        ("truth_max", rep.truth_max.unwrap_or(f64::NAN)),
        ("noise_floor", rep.noise_floor),
        ("unknowns", rep.unknowns as f64),
        ("min_lines_used", rep.min_lines_used as f64),
        ("resolvable_width", rep.resolvable_width),
        ("alias_period", rep.alias_period),
    ] {
        e.push(vec![q.into(), v.into()]);
    }
    w.emit("error_summary.csv", &e)?;
    match rep.rel_error {
        Some(rel) => w.at_most("rel_error", rel, cfg.tolerances.reconstruct_rel),
        // Nothing to recover on the region: the output must stay at the noise floor.
        None => w.at_most("max_abs", rep.max_abs, 3.0 * rep.noise_floor),
    }
    for warning in &rep.warnings {
        w.note("warning", warning);
    }
    Ok(())
}
