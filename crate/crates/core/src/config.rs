//! Run configuration: a TOML file with one table per command.
//!
//! Every key has a default, so an empty file is a valid configuration.
//! Unknown keys and out-of-range values are rejected with the key named.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cgo::{VLocalization, DEFAULT_TAU0, DEFAULT_TAU_GRID};
use crate::error::{Error, Result};
use crate::forward::{Bump, Potential};
use crate::geometry::{CrossSection, CylinderDomain};
use crate::phase::{strip_half_width, BoundaryPhase, Branch, DEFAULT_DET_MIN};
use crate::pipeline::{
    X3Basis, DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_POINTS, DEFAULT_H_VALUES, DEFAULT_NOISE_REL, DEFAULT_RADON_REG,
    DEFAULT_X3_RIDGE,
};
use crate::radon::{DEFAULT_ANGLES, DEFAULT_OFFSETS};
use crate::C64;

pub const COMMANDS: [&str; 10] = [
    "eikonal",
    "amplitude",
    "cgo-residual",
    "forward",
    "carleman",
    "identity",
    "moments",
    "radon",
    "support",
    "reconstruct",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Synthetic,
    Blind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionShape {
    #[default]
    Square,
    Disk,
    Polyline,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Localization {
    #[default]
    Plateau,
    None,
}

impl From<Localization> for VLocalization {
    fn from(l: Localization) -> Self {
        match l {
            Localization::Plateau => VLocalization::Plateau,
            Localization::None => VLocalization::None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    #[default]
    Exponential,
    Harmonic,
    Polynomial,
}

/// Smooth bump e^{1−1/(1−r²)} on an ellipsoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    /// [re, im]
    pub amplitude: [f64; 2],
}

impl BumpSpec {
    pub fn to_bump(&self) -> Bump {
        Bump {
            center: self.center,
            radii: self.radii,
            amplitude: C64::new(self.amplitude[0], self.amplitude[1]),
        }
    }
}

/// Planar bump used by the transform-level commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub center: [f64; 2],
    pub radii: [f64; 2],
    pub amplitude: [f64; 2],
}

impl BlobSpec {
    pub fn eval(&self, x: [f64; 2]) -> C64 {
        let s = (((x[0] - self.center[0]) / self.radii[0]).powi(2) + ((x[1] - self.center[1]) / self.radii[1]).powi(2))
            .sqrt();
        C64::new(self.amplitude[0], self.amplitude[1]) * crate::numerics::bump(s)
    }
}

pub fn potential_of(bumps: &[BumpSpec]) -> Potential {
    Potential {
        bumps: bumps.iter().map(BumpSpec::to_bump).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Optional file holding this table; its keys replace the inline ones.
    pub descriptor: Option<PathBuf>,
    pub cross_section: SectionShape,
    /// Polyline vertices.
    pub vertices: Vec<[f64; 2]>,
    pub height: f64,
    /// Γ₀ as arc-length intervals [s0, s1] of the cross-section boundary.
    pub gamma0: Vec<[f64; 2]>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            descriptor: None,
            cross_section: SectionShape::Square,
            vertices: Vec::new(),
            height: 0.25,
            gamma0: vec![[3.2, 3.8]],
        }
    }
}

impl GeometryConfig {
    fn corner() -> Self {
        GeometryConfig {
            height: 1.0,
            gamma0: vec![[0.85, 1.15]],
            ..Default::default()
        }
    }

    pub fn domain(&self) -> Result<CylinderDomain> {
        let section = match self.cross_section {
            SectionShape::Square => CrossSection::unit_square(),
            SectionShape::Disk => CrossSection::unit_disk(),
            SectionShape::Polyline => CrossSection::polyline(self.vertices.clone())?,
        };
        let arcs: Vec<(f64, f64)> = self.gamma0.iter().map(|a| (a[0], a[1])).collect();
        CylinderDomain::new(section, self.height, &arcs)
    }

    fn resolve(&mut self, base: &Path) -> Result<()> {
        if let Some(path) = self.descriptor.clone() {
            let path = if path.is_relative() { base.join(path) } else { path };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("geometry.descriptor {}: {e}", path.display())))?;
            let mut inner: GeometryConfig =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
            if inner.descriptor.is_some() {
                return Err(Error::Config("geometry.descriptor: descriptors cannot nest".into()));
            }
            inner.descriptor = self.descriptor.take();
            *self = inner;
        }
        Ok(())
    }

    fn validate(&self, key: &str) -> Result<()> {
        positive(&format!("{key}.height"), self.height)?;
        if self.gamma0.is_empty() {
            return Err(Error::Config(format!("{key}.gamma0 must list at least one arc")));
        }
        if self.cross_section == SectionShape::Polyline && self.vertices.len() < 3 {
            return Err(Error::Config(format!(
                "{key}.vertices needs at least 3 points for a polyline"
            )));
        }
        self.domain().map_err(|e| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    /// α′(0), the curvature of the boundary phase at the axis.
    pub kappa: f64,
    /// Ray profile half-width ε.
    pub epsilon: f64,
    /// Ray length K.
    pub height_k: f64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            kappa: 0.5,
            epsilon: 0.3,
            height_k: 1.0,
        }
    }
}

impl PhaseConfig {
    pub fn boundary_phase(&self) -> Result<BoundaryPhase> {
        BoundaryPhase::new(self.kappa, self.height_k, self.epsilon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EikonalConfig {
    /// Nodes per side of the strip grid [−ε, ε] × [0, K].
    pub nodes: usize,
}

impl Default for EikonalConfig {
    fn default() -> Self {
        EikonalConfig { nodes: 128 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplitudeConfig {
    pub nodes: usize,
    /// Point on the axis where the Laplacian is checked.
    pub axis_point: f64,
    /// Finite-difference steps of the axis check.
    pub fd_steps: Vec<f64>,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        AmplitudeConfig {
            nodes: 128,
            axis_point: 1.0,
            fd_steps: vec![0.04, 0.02, 0.01, 0.005],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualConfig {
    /// Potential of the CGO solution whose correction is measured.
    pub q: Vec<BumpSpec>,
    pub grid: [usize; 3],
    pub taus: Vec<f64>,
    pub correction_grid: [usize; 3],
    pub correction_taus: Vec<f64>,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        ResidualConfig {
            q: PotentialsConfig::default().q2,
            grid: [81, 81, 21],
            taus: vec![10.0, 20.0],
            correction_grid: [48, 48, 48],
            correction_taus: vec![8.0, 16.0, 32.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    pub grid: [usize; 3],
    /// τ of the CGO trace used as Dirichlet data.
    pub tau: f64,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        ForwardConfig {
            grid: [33, 33, 33],
            tau: 8.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarlemanConfig {
    pub grid: [usize; 3],
    pub taus: Vec<f64>,
    pub fields: usize,
    /// Bumps per random field.
    pub bumps: usize,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        CarlemanConfig {
            grid: [48, 48, 48],
            taus: vec![8.0, 16.0, 24.0, 32.0, 40.0],
            fields: 20,
            bumps: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub grid: [usize; 3],
    pub taus: Vec<f64>,
    pub tau0: f64,
    /// Frequency shift N as [re, im].
    pub n: [f64; 2],
    pub localization: Localization,
    /// Also evaluate the boundary form (one Dirichlet solve per τ).
    pub boundary: bool,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            grid: [129, 129, 33],
            taus: DEFAULT_TAU_GRID.to_vec(),
            tau0: DEFAULT_TAU0,
            n: [0.0, -1.0],
            localization: Localization::Plateau,
            boundary: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialsConfig {
    pub q1: Vec<BumpSpec>,
    pub q2: Vec<BumpSpec>,
}

impl Default for PotentialsConfig {
    fn default() -> Self {
        PotentialsConfig {
            q1: Vec::new(),
            q2: vec![BumpSpec {
                center: [0.05, 0.5, 0.12],
                radii: [0.25, 0.3, 0.1],
                amplitude: [0.8, 0.3],
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsConfig {
    pub h_values: Vec<f64>,
    pub n: [f64; 2],
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig {
            h_values: DEFAULT_H_VALUES.to_vec(),
            n: [0.0, -2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadonConfig {
    /// Nodes per side on [−1, 1]².
    pub nodes: usize,
    pub angles: usize,
    pub offsets: usize,
    pub mus: Vec<f64>,
    pub phantom: Vec<BlobSpec>,
}

impl Default for RadonConfig {
    fn default() -> Self {
        RadonConfig {
            nodes: 128,
            angles: DEFAULT_ANGLES,
            offsets: DEFAULT_OFFSETS,
            mus: vec![0.0, 0.5, 1.0],
            phantom: vec![
                BlobSpec {
                    center: [0.0, 0.0],
                    radii: [0.7, 0.55],
                    amplitude: [1.0, 0.0],
                },
                BlobSpec {
                    center: [0.25, 0.1],
                    radii: [0.2, 0.3],
                    amplitude: [-0.4, 0.3],
                },
                BlobSpec {
                    center: [-0.3, -0.15],
                    radii: [0.25, 0.15],
                    amplitude: [0.5, -0.2],
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupportConfig {
    pub nodes: usize,
    pub mu: f64,
    /// Half side of the square set E centred at the origin.
    pub set_half_width: f64,
    pub inside: Vec<BlobSpec>,
    pub exterior: Vec<BlobSpec>,
}

impl Default for SupportConfig {
    fn default() -> Self {
        SupportConfig {
            nodes: 128,
            mu: 0.8,
            set_half_width: 0.5,
            inside: vec![BlobSpec {
                center: [0.0, 0.0],
                radii: [0.4, 0.4],
                amplitude: [1.0, 0.5],
            }],
            exterior: vec![BlobSpec {
                center: [0.75, 0.0],
                radii: [0.12, 0.12],
                amplitude: [0.3, 0.0],
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub geometry: GeometryConfig,
    pub potentials: PotentialsConfig,
    pub gamma_points: usize,
    pub gamma_max: f64,
    pub section_nodes: usize,
    pub angles: usize,
    pub offsets: usize,
    pub radon_reg: f64,
    pub x3_ridge: f64,
    pub x3_nodes: usize,
    pub basis: BasisKind,
    /// Highest mode or degree of the harmonic and polynomial bases.
    pub basis_order: usize,
    pub noise_rel: f64,
    /// Grid of the Dirichlet solves in blind mode.
    pub blind_grid: [usize; 3],
    pub blind_taus: Vec<f64>,
    pub profile_width: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            geometry: GeometryConfig::corner(),
            potentials: PotentialsConfig {
                q1: vec![BumpSpec {
                    center: [0.05, 0.55, 0.5],
                    radii: [0.3, 0.3, 0.45],
                    amplitude: [1.0, 0.5],
                }],
                q2: Vec::new(),
            },
            gamma_points: DEFAULT_GAMMA_POINTS,
            gamma_max: DEFAULT_GAMMA_MAX,
            section_nodes: 40,
            angles: 90,
            offsets: 61,
            radon_reg: DEFAULT_RADON_REG,
            x3_ridge: DEFAULT_X3_RIDGE,
            x3_nodes: 33,
            basis: BasisKind::Exponential,
            basis_order: 2,
            noise_rel: DEFAULT_NOISE_REL,
            blind_grid: [65, 65, 33],
            blind_taus: vec![8.0, 16.0],
            profile_width: 0.05,
        }
    }
}

impl ReconstructConfig {
    pub fn basis(&self) -> X3Basis {
        match self.basis {
            BasisKind::Exponential => X3Basis::Exponential,
            BasisKind::Harmonic => X3Basis::Harmonic {
                max_mode: self.basis_order,
            },
            BasisKind::Polynomial => X3Basis::Polynomial {
                degree: self.basis_order,
            },
        }
    }
}

/// Pass/fail thresholds reported next to the computed quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eikonal: f64,
    pub residual_rel: f64,
    pub green_rel: f64,
    pub identity_slope: f64,
    pub moment_order: f64,
    pub radon_rel: f64,
    pub support_clear: f64,
    pub support_detect: f64,
    pub reconstruct_rel: f64,
    pub carleman_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eikonal: 1e-12,
            residual_rel: 1e-3,
            green_rel: 1e-2,
            identity_slope: -0.8,
            moment_order: 0.9,
            radon_rel: 0.05,
            support_clear: 1e-8,
            support_detect: 1e-3,
            reconstruct_rel: 0.15,
            carleman_slope: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Command to run when none is given on the command line.
    pub command: Option<String>,
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub phase: PhaseConfig,
    pub potentials: PotentialsConfig,
    pub eikonal: EikonalConfig,
    pub amplitude: AmplitudeConfig,
    pub residual: ResidualConfig,
    pub forward: ForwardConfig,
    pub carleman: CarlemanConfig,
    pub identity: IdentityConfig,
    pub moments: MomentsConfig,
    pub radon: RadonConfig,
    pub support: SupportConfig,
    pub reconstruct: ReconstructConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            mode: Mode::Synthetic,
            out_dir: PathBuf::from("out"),
            seed: 0,
            geometry: GeometryConfig::default(),
            phase: PhaseConfig::default(),
            potentials: PotentialsConfig::default(),
            eikonal: EikonalConfig::default(),
            amplitude: AmplitudeConfig::default(),
            residual: ResidualConfig::default(),
            forward: ForwardConfig::default(),
            carleman: CarlemanConfig::default(),
            identity: IdentityConfig::default(),
            moments: MomentsConfig::default(),
            radon: RadonConfig::default(),
            support: SupportConfig::default(),
            reconstruct: ReconstructConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} = {v} must be positive and finite")))
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} = {v} must be finite")))
    }
}

fn nonempty<T>(key: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(Error::Config(format!("{key} must not be empty")))
    } else {
        Ok(())
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v < min {
        Err(Error::Config(format!("{key} = {v} must be at least {min}")))
    } else {
        Ok(())
    }
}

fn grid3(key: &str, g: [usize; 3]) -> Result<()> {
    for (axis, n) in g.iter().enumerate() {
        at_least(&format!("{key}[{axis}]"), *n, 3)?;
    }
    Ok(())
}

fn all_positive(key: &str, v: &[f64]) -> Result<()> {
    nonempty(key, v)?;
    for (i, x) in v.iter().enumerate() {
        positive(&format!("{key}[{i}]"), *x)?;
    }
    Ok(())
}

fn all_finite(key: &str, v: &[f64]) -> Result<()> {
    nonempty(key, v)?;
    for (i, x) in v.iter().enumerate() {
        finite(&format!("{key}[{i}]"), *x)?;
    }
    Ok(())
}

fn bumps(key: &str, b: &[BumpSpec]) -> Result<()> {
    for (i, s) in b.iter().enumerate() {
        for r in s.radii {
            positive(&format!("{key}[{i}].radii"), r)?;
        }
        for c in s.center.iter().chain(&s.amplitude) {
            finite(&format!("{key}[{i}]"), *c)?;
        }
    }
    Ok(())
}

fn blobs(key: &str, b: &[BlobSpec]) -> Result<()> {
    for (i, s) in b.iter().enumerate() {
        for r in s.radii {
            positive(&format!("{key}[{i}].radii"), r)?;
        }
        for c in s.center.iter().chain(&s.amplitude) {
            finite(&format!("{key}[{i}]"), *c)?;
        }
    }
    Ok(())
}

impl RunConfig {
    /// Checks every value; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.command {
            if !COMMANDS.contains(&c.as_str()) {
                return Err(Error::Config(format!(
                    "command = {c:?} is not one of {}",
                    COMMANDS.join(", ")
                )));
            }
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed = {} exceeds {}", self.seed, i64::MAX)));
        }
        self.geometry.validate("geometry")?;
        let p = &self.phase;
        positive("phase.epsilon", p.epsilon)?;
        positive("phase.height_k", p.height_k)?;
        finite("phase.kappa", p.kappa)?;
        let bp = p
            .boundary_phase()
            .map_err(|e| Error::Config(format!("phase.kappa = {}: {e}", p.kappa)))?;
        if strip_half_width(&bp, Branch::Direct, DEFAULT_DET_MIN, p.epsilon) < p.epsilon {
            return Err(Error::Config(format!(
                "phase.kappa = {}: rays of half-width {} reach a caustic before height {}",
                p.kappa, p.epsilon, p.height_k
            )));
        }
        bumps("potentials.q1", &self.potentials.q1)?;
        bumps("potentials.q2", &self.potentials.q2)?;
        at_least("eikonal.nodes", self.eikonal.nodes, 3)?;
        at_least("amplitude.nodes", self.amplitude.nodes, 3)?;
        finite("amplitude.axis_point", self.amplitude.axis_point)?;
        all_positive("amplitude.fd_steps", &self.amplitude.fd_steps)?;
        let r = &self.residual;
        bumps("residual.q", &r.q)?;
        grid3("residual.grid", r.grid)?;
        all_positive("residual.taus", &r.taus)?;
        grid3("residual.correction_grid", r.correction_grid)?;
        all_positive("residual.correction_taus", &r.correction_taus)?;
        grid3("forward.grid", self.forward.grid)?;
        positive("forward.tau", self.forward.tau)?;
        let c = &self.carleman;
        grid3("carleman.grid", c.grid)?;
        all_positive("carleman.taus", &c.taus)?;
        at_least("carleman.fields", c.fields, 1)?;
        at_least("carleman.bumps", c.bumps, 1)?;
        let i = &self.identity;
        grid3("identity.grid", i.grid)?;
        all_positive("identity.taus", &i.taus)?;
        positive("identity.tau0", i.tau0)?;
        finite("identity.n", i.n[0])?;
        finite("identity.n", i.n[1])?;
        if let Some(t) = i.taus.iter().find(|t| **t < i.tau0) {
            return Err(Error::Config(format!(
                "identity.taus: {t} is below identity.tau0 = {}",
                i.tau0
            )));
        }
        all_positive("moments.h_values", &self.moments.h_values)?;
        finite("moments.n", self.moments.n[0])?;
        finite("moments.n", self.moments.n[1])?;
        let rd = &self.radon;
        at_least("radon.nodes", rd.nodes, 8)?;
        at_least("radon.angles", rd.angles, 2)?;
        at_least("radon.offsets", rd.offsets, 3)?;
        all_finite("radon.mus", &rd.mus)?;
        blobs("radon.phantom", &rd.phantom)?;
        let s = &self.support;
        at_least("support.nodes", s.nodes, 8)?;
        finite("support.mu", s.mu)?;
        positive("support.set_half_width", s.set_half_width)?;
        blobs("support.inside", &s.inside)?;
        blobs("support.exterior", &s.exterior)?;
        let rc = &self.reconstruct;
        rc.geometry.validate("reconstruct.geometry")?;
        bumps("reconstruct.potentials.q1", &rc.potentials.q1)?;
        bumps("reconstruct.potentials.q2", &rc.potentials.q2)?;
        at_least("reconstruct.gamma_points", rc.gamma_points, 1)?;
        if rc.gamma_points > 1 {
            positive("reconstruct.gamma_max", rc.gamma_max)?;
        }
        at_least("reconstruct.section_nodes", rc.section_nodes, 4)?;
        at_least("reconstruct.angles", rc.angles, 2)?;
        at_least("reconstruct.offsets", rc.offsets, 3)?;
        positive("reconstruct.radon_reg", rc.radon_reg)?;
        positive("reconstruct.x3_ridge", rc.x3_ridge)?;
        at_least("reconstruct.x3_nodes", rc.x3_nodes, 2)?;
        positive("reconstruct.noise_rel", rc.noise_rel)?;
        grid3("reconstruct.blind_grid", rc.blind_grid)?;
        all_positive("reconstruct.blind_taus", &rc.blind_taus)?;
        positive("reconstruct.profile_width", rc.profile_width)?;
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.eikonal", t.eikonal),
            ("tolerances.residual_rel", t.residual_rel),
            ("tolerances.green_rel", t.green_rel),
            ("tolerances.moment_order", t.moment_order),
            ("tolerances.radon_rel", t.radon_rel),
            ("tolerances.support_clear", t.support_clear),
            ("tolerances.support_detect", t.support_detect),
            ("tolerances.reconstruct_rel", t.reconstruct_rel),
            ("tolerances.carleman_slope", t.carleman_slope),
        ] {
            positive(key, v)?;
        }
        finite("tolerances.identity_slope", t.identity_slope)?;
        Ok(())
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.geometry.resolve(base)?;
        cfg.reconstruct.geometry.resolve(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn n_identity(&self) -> C64 {
        C64::new(self.identity.n[0], self.identity.n[1])
    }
}

/// Reads, fills defaults and validates.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_toml("", Path::new(".")).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::from_toml("[phase]\nkapa = 0.3\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("kapa"), "{e}");
        assert!(e.is_validation());
    }

    #[test]
    fn steep_boundary_phase_is_rejected() {
        let e = RunConfig::from_toml("[phase]\nkappa = 1.1\n", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("phase.kappa"), "{e}");
    }

    #[test]
    fn bad_values_name_their_key() {
        for (text, key) in [
            ("[identity]\ntaus = []\n", "identity.taus"),
            ("[tolerances]\nradon_rel = -1.0\n", "tolerances.radon_rel"),
            ("[geometry]\nheight = 0.0\n", "geometry.height"),
            ("command = \"plot\"\n", "command"),
            ("[reconstruct]\nx3_ridge = 0.0\n", "reconstruct.x3_ridge"),
        ] {
            let e = RunConfig::from_toml(text, Path::new(".")).unwrap_err();
            assert!(e.to_string().contains(key), "{text}: {e}");
        }
    }

    #[test]
    fn defaults_survive_emit_and_parse() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text, Path::new(".")).unwrap(), cfg);
    }
}
