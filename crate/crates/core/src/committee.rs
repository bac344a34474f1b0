//! Committee pivotality, gatekeeping intensity and the overconfidence wedge.

use crate::equilibrium::{high_type_rate, solve_equilibrium, EquilibriumSolution, Scenario};
use crate::error::{Error, Result};
use crate::signal_model::{SignalModel, State};

/// Largest committee accepted by the enumeration check.
pub const ENUMERATION_LIMIT: usize = 20;

/// `n` experts vote; the risky action is implemented when at least `k` say yes.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeSpec {
    pub k: usize,
    /// `member_yes_probs[j] = [Pr(a^j = 1 | ω = 0), Pr(a^j = 1 | ω = 1)]`.
    pub member_yes_probs: Vec<[f64; 2]>,
}

impl CommitteeSpec {
    pub fn new(k: usize, member_yes_probs: Vec<[f64; 2]>) -> Result<Self> {
        let spec = CommitteeSpec {
            k,
            member_yes_probs,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// All `n` members vote yes with `q[ω]` given the state.
    pub fn symmetric(n: usize, k: usize, q: [f64; 2]) -> Result<Self> {
        CommitteeSpec::new(k, vec![q; n])
    }

    pub fn n(&self) -> usize {
        self.member_yes_probs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::invalid("committee.n", "must be at least 1"));
        }
        if self.k == 0 || self.k > n {
            return Err(Error::invalid(
                "committee.k",
                format!("must lie in [1, {n}], got {}", self.k),
            ));
        }
        for (j, q) in self.member_yes_probs.iter().enumerate() {
            for p in q {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid(
                        format!("committee.member_probs[{j}]"),
                        format!("must lie in [0, 1], got {p}"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_member(&self, member: usize) -> Result<()> {
        self.validate()?;
        if member >= self.n() {
            return Err(Error::invalid(
                "member",
                format!("index {member} out of range for {} members", self.n()),
            ));
        }
        Ok(())
    }
}

/// Probability that exactly `k - 1` of the other members vote yes in state
/// `omega`, by convolution over members.
pub fn pivotality(spec: &CommitteeSpec, member: usize, omega: State) -> Result<f64> {
    spec.check_member(member)?;
    let w = omega.index();
    let mut dist = vec![0.0; spec.n()];
    dist[0] = 1.0;
    let mut seen = 0;
    for (j, q) in spec.member_yes_probs.iter().enumerate() {
        if j == member {
            continue;
        }
        let q = q[w];
        seen += 1;
        for yes in (1..=seen).rev() {
            dist[yes] = dist[yes] * (1.0 - q) + dist[yes - 1] * q;
        }
        dist[0] *= 1.0 - q;
    }
    Ok(dist[spec.k - 1])
}

/// Same quantity by summing over all `2^(n-1)` vote profiles of the others.
pub fn pivotality_enumerated(spec: &CommitteeSpec, member: usize, omega: State) -> Result<f64> {
    spec.check_member(member)?;
    if spec.n() > ENUMERATION_LIMIT {
        return Err(Error::invalid(
            "committee.n",
            format!("enumeration limited to {ENUMERATION_LIMIT} members"),
        ));
    }
    let w = omega.index();
    let others: Vec<f64> = spec
        .member_yes_probs
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != member)
        .map(|(_, q)| q[w])
        .collect();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << others.len()) {
        if mask.count_ones() as usize != spec.k - 1 {
            continue;
        }
        let mut p = 1.0;
        for (i, q) in others.iter().enumerate() {
            p *= if mask >> i & 1 == 1 { *q } else { 1.0 - q };
        }
        total += p;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeSolution {
    /// `[ζ0, ζ1]`
    pub zeta: [f64; 2],
    pub solution: EquilibriumSolution,
    /// Blocked recommendations are read by the market as a risky
    /// recommendation with no observed outcome.
    pub blocked_maps_to_unobserved: bool,
}

/// Equilibrium cutoff for one member, with the success branch scaled by ζ1
/// and the failure branch by ζ0.
pub fn committee_cutoff(
    sc: &Scenario,
    spec: &CommitteeSpec,
    member: usize,
) -> Result<CommitteeSolution> {
    let zeta = [
        pivotality(spec, member, State::Bad)?,
        pivotality(spec, member, State::Good)?,
    ];
    let mut scaled = sc.clone();
    scaled.realization = [sc.realization[0] * zeta[0], sc.realization[1] * zeta[1]];
    Ok(CommitteeSolution {
        zeta,
        solution: solve_equilibrium(&scaled)?,
        blocked_maps_to_unobserved: zeta[0] < 1.0 || zeta[1] < 1.0,
    })
}

/// Piecewise-linear `λ(T)`: stricter gatekeeping `T` never raises λ.
#[derive(Debug, Clone, PartialEq)]
pub struct GatekeepingTable {
    points: Vec<(f64, f64)>,
}

impl GatekeepingTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("gatekeeping", "needs at least one point"));
        }
        for (i, &(t, l)) in points.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::invalid(
                    format!("gatekeeping[{i}].t"),
                    "must be finite",
                ));
            }
            if !(l > 0.0 && l <= 1.0) {
                return Err(Error::invalid(
                    format!("gatekeeping[{i}].lambda"),
                    format!("must lie in (0, 1], got {l}"),
                ));
            }
            if i > 0 {
                let (t0, l0) = points[i - 1];
                if t <= t0 {
                    return Err(Error::invalid(
                        "gatekeeping",
                        "T values must be strictly increasing",
                    ));
                }
                if l > l0 {
                    return Err(Error::invalid(
                        "gatekeeping",
                        "lambda must be nonincreasing in T",
                    ));
                }
            }
        }
        Ok(GatekeepingTable { points })
    }

    /// Linear interpolation, flat beyond the end points.
    pub fn lambda_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((t0, l0), (t1, l1)) = (w[0], w[1]);
            if t <= t1 {
                return l0 + (l1 - l0) * (t - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// `(T, λ(T), cutoff)` for each gatekeeping level.
pub fn gatekeeping_sweep(
    sc: &Scenario,
    table: &GatekeepingTable,
    t_grid: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    t_grid
        .iter()
        .map(|&t| {
            let lambda = table.lambda_at(t);
            let moved = sc.clone().with_frictions(sc.frictions.with_lambda(lambda));
            Ok((t, lambda, solve_equilibrium(&moved)?.cutoff))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverconfidenceWedge {
    pub perceived_cutoff: f64,
    pub actual_cutoff: f64,
    /// High-type rate at the perceived cutoff minus the rate at the actual one.
    pub rate_wedge: f64,
}

/// Cutoff when the expert reads the signal with noise `perceived_sigma_h`
/// while the market updates with the true model, against the undistorted one.
pub fn overconfidence_wedge(sc: &Scenario, perceived_sigma_h: f64) -> Result<OverconfidenceWedge> {
    sc.validate()?;
    if !(perceived_sigma_h > 0.0 && perceived_sigma_h <= sc.model.sigma_h) {
        return Err(Error::invalid(
            "perceived_sigma_h",
            format!(
                "must lie in (0, sigma_h = {}], got {perceived_sigma_h}",
                sc.model.sigma_h
            ),
        ));
    }
    let actual = solve_equilibrium(sc)?;
    let mut distorted = sc.clone();
    distorted.perceived = Some(SignalModel {
        sigma_h: perceived_sigma_h,
        ..sc.model
    });
    let perceived = solve_equilibrium(&distorted)?;
    let alpha = sc.beliefs.alpha;
    Ok(OverconfidenceWedge {
        perceived_cutoff: perceived.cutoff,
        actual_cutoff: actual.cutoff,
        rate_wedge: high_type_rate(&sc.model, alpha, perceived.cutoff)
            - high_type_rate(&sc.model, alpha, actual.cutoff),
    })
}
