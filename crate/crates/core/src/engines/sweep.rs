use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::metrics::{engine_metrics, EngineMetrics, Mode};
use crate::catalog;
use crate::dynamics::{build_redfield, steady_state, RedfieldOptions, ReservoirSpec, SteadyReport};
use crate::error::Error;
use crate::exactset::{Lead, SetModel, TransportResult};
use crate::quantum::{build_supersystem, SupersystemSpec, TripleDot};
use crate::specdens::SpectralDensity;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Solver {
    Exact,
    Rc,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Exact => "exact",
            Solver::Rc => "rc",
        }
    }
}

/// Symmetric two-terminal device, μ_L = −μ_R = V/2, lead peak height Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SetTemplate {
    pub eps: f64,
    pub delta: f64,
    pub eps_left: f64,
    pub eps_right: f64,
    pub beta_left: f64,
    pub beta_right: f64,
    /// Quadrature tolerance of the exact currents.
    pub tol: f64,
    pub lamb_shift: bool,
    /// Largest β·δ for which the reaction-coordinate route is trusted silently.
    pub validity_bound: f64,
}

impl Default for SetTemplate {
    fn default() -> Self {
        Self {
            eps: 1.0,
            delta: 0.01,
            eps_left: 1.0,
            eps_right: 1.0,
            beta_left: 2.0,
            beta_right: 1.0,
            tol: 1e-9,
            lamb_shift: true,
            validity_bound: 0.05,
        }
    }
}

impl SetTemplate {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.eps, self.delta, self.eps_left, self.eps_right, self.beta_left, self.beta_right, self.tol];
        if !vals.iter().all(|v| v.is_finite()) || self.delta <= 0.0 || self.tol <= 0.0 {
            return Err(Error::invalid("device template needs finite values and positive delta, tol"));
        }
        if !(self.beta_left > self.beta_right && self.beta_right > 0.0) {
            return Err(Error::invalid("the left lead must be the colder one"));
        }
        Ok(())
    }

    pub fn model(&self, v: f64, gamma: f64) -> SetModel {
        let lead = |eps: f64, beta: f64, mu: f64| Lead { gamma, delta: self.delta, eps, beta, mu };
        SetModel {
            eps: self.eps,
            left: lead(self.eps_left, self.beta_left, 0.5 * v),
            right: lead(self.eps_right, self.beta_right, -0.5 * v),
        }
    }

    pub fn temperatures(&self) -> (f64, f64) {
        (1.0 / self.beta_left, 1.0 / self.beta_right)
    }

    /// β·δ of the hotter-coupled lead exceeds the configured bound.
    pub fn outside_validity(&self) -> bool {
        self.beta_left.max(self.beta_right) * self.delta > self.validity_bound
    }
}

/// Steady state of the triple dot whose lead modes are the reaction
/// coordinates of the two Lorentzian leads.
pub fn rc_transport(tpl: &SetTemplate, v: f64, gamma: f64) -> Result<(SteadyReport, TransportResult)> {
    let entry = catalog::lookup("lorentzian")?;
    let m = tpl.model(v, gamma);
    let map = |l: &Lead| -> Result<(f64, f64, SpectralDensity)> {
        let p = [l.gamma, l.delta, l.eps];
        Ok((entry.lambda_sq(&p)?.sqrt(), entry.rc_energy(&p)?, entry.residual(&p)?))
    };
    let (ll, el, rl) = map(&m.left)?;
    let (lr, er, rr) = map(&m.right)?;
    let s = build_supersystem(&SupersystemSpec::TripleDot(TripleDot {
        eps: m.eps,
        lambda_l: ll,
        lambda_r: lr,
        eps_l: el,
        eps_r: er,
    }))?;
    let att = [
        ReservoirSpec::fermionic("left", m.left.beta, m.left.mu, rl, s.couplings[0].clone()),
        ReservoirSpec::fermionic("right", m.right.beta, m.right.mu, rr, s.couplings[1].clone()),
    ];
    let opts = RedfieldOptions { lamb_shift: tpl.lamb_shift, number: s.number.clone(), ..Default::default() };
    let report = steady_state(&build_redfield(&s.hamiltonian, &att, &opts)?)?;
    let left = &report.currents[0];
    let matter = left.matter.unwrap_or(0.0);
    let t = TransportResult::from_currents(matter, left.energy, m.left.mu, m.right.mu);
    Ok((report, t))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cell {
    pub v: f64,
    pub gamma: f64,
    pub transport: Option<TransportResult>,
    pub metrics: Option<EngineMetrics>,
    pub error: Option<String>,
}

impl Cell {
    pub fn mode(&self) -> Option<Mode> {
        self.metrics.map(|m| m.mode)
    }
}

pub fn evaluate_cell(tpl: &SetTemplate, v: f64, gamma: f64, solver: Solver) -> Cell {
    let (tl, tr) = tpl.temperatures();
    let run = || -> Result<(TransportResult, EngineMetrics)> {
        let t = match solver {
            Solver::Exact => tpl.model(v, gamma).currents(tpl.tol)?,
            Solver::Rc => rc_transport(tpl, v, gamma)?.1,
        };
        Ok((t, engine_metrics(&t, tl, tr)?))
    };
    match run() {
        Ok((t, m)) => Cell { v, gamma, transport: Some(t), metrics: Some(m), error: None },
        Err(e) => Cell { v, gamma, transport: None, metrics: None, error: Some(format!("{e}")) },
    }
}

/// Cells are stored row by row: all V for the first Γ, then the next Γ.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EngineMapGrid {
    pub solver: Solver,
    pub v_axis: Vec<f64>,
    pub gamma_axis: Vec<f64>,
    pub cells: Vec<Cell>,
    pub warnings: Vec<String>,
}

fn check_axis(a: &[f64], name: &str) -> Result<()> {
    if a.is_empty() || !a.iter().all(|x| x.is_finite()) || a.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

impl EngineMapGrid {
    /// Assembles a grid from cells evaluated in any order.
    pub fn from_cells(
        tpl: &SetTemplate,
        solver: Solver,
        v_axis: Vec<f64>,
        gamma_axis: Vec<f64>,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        check_axis(&v_axis, "V")?;
        check_axis(&gamma_axis, "Gamma")?;
        if cells.len() != v_axis.len() * gamma_axis.len() {
            return Err(Error::invalid("cell count does not match the axes"));
        }
        let mut warnings = Vec::new();
        if solver == Solver::Rc && tpl.outside_validity() {
            warnings.push(format!(
                "beta*delta = {:.3} exceeds the validity bound {}",
                tpl.beta_left.max(tpl.beta_right) * tpl.delta,
                tpl.validity_bound
            ));
        }
        Ok(Self { solver, v_axis, gamma_axis, cells, warnings })
    }

    pub fn cell(&self, gi: usize, vi: usize) -> &Cell {
        &self.cells[gi * self.v_axis.len() + vi]
    }

    pub fn mode(&self, gi: usize, vi: usize) -> Option<Mode> {
        self.cell(gi, vi).mode()
    }

    pub fn row_modes(&self, gi: usize) -> Vec<Option<Mode>> {
        (0..self.v_axis.len()).map(|vi| self.mode(gi, vi)).collect()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

/// Sequential sweep; callers wanting parallelism evaluate cells themselves
/// and assemble them with [`EngineMapGrid::from_cells`].
pub fn sweep_map(tpl: &SetTemplate, v_axis: &[f64], gamma_axis: &[f64], solver: Solver) -> Result<EngineMapGrid> {
    tpl.validate()?;
    check_axis(v_axis, "V")?;
    check_axis(gamma_axis, "Gamma")?;
    let cells = gamma_axis
        .iter()
        .flat_map(|&g| v_axis.iter().map(move |&v| (v, g)))
        .map(|(v, g)| evaluate_cell(tpl, v, g, solver))
        .collect();
    EngineMapGrid::from_cells(tpl, solver, v_axis.to_vec(), gamma_axis.to_vec(), cells)
}

/// Points where the mode changes between neighbouring V cells of a row,
/// collected per kind of transition and ordered by Γ.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Boundary {
    pub from: Mode,
    pub to: Mode,
    /// (V, Γ) pairs at the V-midpoint between the two cells.
    pub points: Vec<(f64, f64)>,
}

pub fn mode_boundaries(grid: &EngineMapGrid) -> Vec<Boundary> {
    let mut map: BTreeMap<(u8, u8), Vec<(f64, f64)>> = BTreeMap::new();
    let key = |m: Mode| m as u8;
    for (gi, &g) in grid.gamma_axis.iter().enumerate() {
        for vi in 1..grid.v_axis.len() {
            if let (Some(a), Some(b)) = (grid.mode(gi, vi - 1), grid.mode(gi, vi)) {
                if a != b {
                    let v = 0.5 * (grid.v_axis[vi - 1] + grid.v_axis[vi]);
                    map.entry((key(a), key(b))).or_default().push((v, g));
                }
            }
        }
    }
    let decode = |k: u8| [Mode::Engine, Mode::Fridge, Mode::Dud][k as usize];
    map.into_iter().map(|((a, b), points)| Boundary { from: decode(a), to: decode(b), points }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeAgreement {
    pub cells: usize,
    pub mismatched: usize,
    /// Mismatches whose mode does not appear in the other grid within one
    /// cell (including diagonals).
    pub beyond_one_cell: usize,
}

pub fn compare_modes(a: &EngineMapGrid, b: &EngineMapGrid) -> Result<ModeAgreement> {
    if a.v_axis != b.v_axis || a.gamma_axis != b.gamma_axis {
        return Err(Error::invalid("grids are on different axes"));
    }
    let (ng, nv) = (a.gamma_axis.len(), a.v_axis.len());
    let near = |g: &EngineMapGrid, gi: usize, vi: usize, m: Option<Mode>| {
        (gi.saturating_sub(1)..=(gi + 1).min(ng - 1))
            .any(|i| (vi.saturating_sub(1)..=(vi + 1).min(nv - 1)).any(|j| g.mode(i, j) == m))
    };
    let mut mismatched = 0;
    let mut beyond = 0;
    for gi in 0..ng {
        for vi in 0..nv {
            let (ma, mb) = (a.mode(gi, vi), b.mode(gi, vi));
            if ma != mb {
                mismatched += 1;
                if !near(b, gi, vi, ma) || !near(a, gi, vi, mb) {
                    beyond += 1;
                }
            }
        }
    }
    Ok(ModeAgreement { cells: ng * nv, mismatched, beyond_one_cell: beyond })
}

/// Worst deviation of `test` from `reference`, each cell scaled by the
/// largest reference magnitude of its Γ row.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurrentAgreement {
    pub matter: f64,
    pub energy: f64,
    /// (V, Γ) of the worst matter-current cell.
    pub worst_cell: (f64, f64),
}

pub fn compare_currents(reference: &EngineMapGrid, test: &EngineMapGrid) -> Result<CurrentAgreement> {
    if reference.v_axis != test.v_axis || reference.gamma_axis != test.gamma_axis {
        return Err(Error::invalid("grids are on different axes"));
    }
    let nv = reference.v_axis.len();
    let mut out = CurrentAgreement { matter: 0.0, energy: 0.0, worst_cell: (f64::NAN, f64::NAN) };
    for gi in 0..reference.gamma_axis.len() {
        let row: Vec<(&Cell, &Cell)> = (0..nv).map(|vi| (reference.cell(gi, vi), test.cell(gi, vi))).collect();
        let mut scale_m: f64 = 0.0;
        let mut scale_e: f64 = 0.0;
        for (r, _) in &row {
            let t = r.transport.ok_or_else(|| Error::invalid("reference grid has failed cells"))?;
            scale_m = scale_m.max(t.matter.abs());
            scale_e = scale_e.max(t.energy.abs());
        }
        for (vi, (r, t)) in row.iter().enumerate() {
            let (r, t) =
                (r.transport.unwrap(), t.transport.ok_or_else(|| Error::invalid("test grid has failed cells"))?);
            let dm = (r.matter - t.matter).abs() / scale_m.max(f64::MIN_POSITIVE);
            let de = (r.energy - t.energy).abs() / scale_e.max(f64::MIN_POSITIVE);
            if dm > out.matter {
                out.matter = dm;
                out.worst_cell = (reference.v_axis[vi], reference.gamma_axis[gi]);
            }
            out.energy = out.energy.max(de);
        }
    }
    Ok(out)
}
