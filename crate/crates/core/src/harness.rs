//! End-to-end experiments: for each boundary point of a case, run the
//! stationary probe on the base domain, the evolution probe on the cylinder
//! at mid-height, and the series criterion, then check the lateral/base
//! equivalence and the one-sided criterion consistency.
//!
//! The equivalence assertion is the Tikhonov-type statement made empirical:
//! whenever both probes commit to a verdict they must commit to the same
//! one. The criterion check is one-sided because series divergence is only
//! sufficient for regularity: the single forbidden pattern is a divergent
//! series at a point the probes call irregular.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{self, CriterionParams, SeriesVerdict};
use crate::domain::{Cylinder, Domain, Shape};
use crate::error::{KolmoError, Result};
use crate::kernel::FundamentalSolution;
use crate::operator::{OperatorConfig, OuOperator};
use crate::rng::derive_seed;
use crate::solver::{
    regularity_probe_evolution, regularity_probe_stationary, ProbeConfig, ProbeVerdict,
    RegularityVerdict, SolverConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    Regular,
    Irregular,
    #[default]
    Unknown,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeCase {
    pub x0: Vec<f64>,
    #[serde(default)]
    pub expected: ExpectedVerdict,
}

/// One experiment: an operator, a base domain, probe points, budgets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub operator: OperatorConfig,
    pub domain: Shape,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    pub probes: Vec<ProbeCase>,
    /// Lateral probe times as fractions of t_end; the statement holds for
    /// every interior time, so mid-height is the default representative.
    #[serde(default = "default_t0_fractions")]
    pub t0_fractions: Vec<f64>,
    #[serde(default)]
    pub criterion: CriterionParams,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_t_end() -> f64 {
    1.0
}

fn default_t0_fractions() -> Vec<f64> {
    vec![0.5]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub case: String,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub expected: ExpectedVerdict,
    pub stationary: ProbeVerdict,
    pub evolution: ProbeVerdict,
    pub criterion: SeriesVerdict,
    /// None when either probe was inconclusive.
    pub probes_agree: Option<bool>,
    /// criterion(diverges) together with an irregular probe verdict.
    pub forbidden_combination: bool,
    pub stationary_detail: RegularityVerdict,
    pub evolution_detail: RegularityVerdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceTable {
    pub name: String,
    pub rows: Vec<EquivalenceRow>,
}

impl EquivalenceTable {
    /// True when every row with two committed probe verdicts agrees.
    pub fn all_agree(&self) -> bool {
        self.rows.iter().all(|r| r.probes_agree.unwrap_or(true))
    }

    pub fn forbidden_count(&self) -> usize {
        self.rows.iter().filter(|r| r.forbidden_combination).count()
    }

    /// Rows whose committed verdicts contradict the declared expectation.
    pub fn expectation_mismatches(&self) -> Vec<&EquivalenceRow> {
        self.rows
            .iter()
            .filter(|r| match r.expected {
                ExpectedVerdict::Unknown => false,
                ExpectedVerdict::Regular => {
                    r.stationary == ProbeVerdict::IrregularLikely
                        || r.evolution == ProbeVerdict::IrregularLikely
                }
                ExpectedVerdict::Irregular => {
                    r.stationary == ProbeVerdict::RegularLikely
                        || r.evolution == ProbeVerdict::RegularLikely
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub rows_checked: usize,
    pub forbidden_rows: Vec<String>,
    pub passed: bool,
}

/// One-sided criterion consistency over a computed table.
pub fn check_sufficiency(table: &EquivalenceTable) -> SufficiencyReport {
    let forbidden: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.forbidden_combination)
        .map(|r| format!("{} @ {:?}", r.case, r.x0))
        .collect();
    SufficiencyReport {
        rows_checked: table.rows.len(),
        passed: forbidden.is_empty(),
        forbidden_rows: forbidden,
    }
}

/// Run every probe point of a spec; cases run in parallel, the table is
/// assembled in input order. The evolution probe sits at mid-height of the
/// cylinder, one representative of the time range.
pub fn run_equivalence_suite(spec: &ExperimentSpec) -> Result<EquivalenceTable> {
    let op = OuOperator::from_config(&spec.operator)?;
    let validation = op.validate();
    if !validation.passed() {
        return Err(KolmoError::structural(format!(
            "operator failed validation: {:?}",
            validation
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.clone())
                .collect::<Vec<_>>()
        )));
    }
    let fs = FundamentalSolution::new(op)?;
    let domain = Domain::new(spec.domain.clone(), spec.name.clone())?;
    let cyl = Cylinder::new(domain.clone(), 0.0, spec.t_end)?;
    if spec.t0_fractions.is_empty()
        || spec.t0_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0))
    {
        return Err(KolmoError::Config(
            "t0_fractions must be nonempty with entries in (0, 1)".to_string(),
        ));
    }

    let work: Vec<(usize, &ProbeCase, usize, f64)> = spec
        .probes
        .iter()
        .enumerate()
        .flat_map(|(i, case)| {
            spec.t0_fractions
                .iter()
                .enumerate()
                .map(move |(j, f)| (i, case, j, f * spec.t_end))
        })
        .collect();

    let rows: Result<Vec<EquivalenceRow>> = work
        .par_iter()
        .map(|&(i, case, j, t0)| -> Result<EquivalenceRow> {
            let x0 = DVector::from_column_slice(&case.x0);

            let mut sol_cfg = spec.solver.clone();
            sol_cfg.seed = derive_seed(spec.seed, &[1, i as u64, j as u64]);
            let stationary =
                regularity_probe_stationary(&fs, &domain, &x0, &sol_cfg, &spec.probe)?;

            let mut evo_cfg = spec.solver.clone();
            evo_cfg.seed = derive_seed(spec.seed, &[2, i as u64, j as u64]);
            let evolution =
                regularity_probe_evolution(&fs, &cyl, &x0, t0, &evo_cfg, &spec.probe)?;

            let mut crit_params = spec.criterion.clone();
            crit_params.seed = derive_seed(spec.seed, &[3, i as u64]);
            let criterion_report = criterion::evaluate(&fs, &domain, &x0, &crit_params)?;

            let probes_agree = match (stationary.verdict, evolution.verdict) {
                (ProbeVerdict::Inconclusive, _) | (_, ProbeVerdict::Inconclusive) => None,
                (a, b) => Some(a == b),
            };
            let irregular_somewhere = stationary.verdict == ProbeVerdict::IrregularLikely
                || evolution.verdict == ProbeVerdict::IrregularLikely;
            let forbidden = criterion_report.verdict == SeriesVerdict::DivergesLikely
                && irregular_somewhere;

            Ok(EquivalenceRow {
                case: spec.name.clone(),
                x0: case.x0.clone(),
                t0,
                expected: case.expected,
                stationary: stationary.verdict,
                evolution: evolution.verdict,
                criterion: criterion_report.verdict,
                probes_agree,
                forbidden_combination: forbidden,
                stationary_detail: stationary,
                evolution_detail: evolution,
            })
        })
        .collect();

    Ok(EquivalenceTable {
        name: spec.name.clone(),
        rows: rows?,
    })
}

/// Run several specs and pool the rows.
pub fn run_suite(specs: &[ExperimentSpec]) -> Result<EquivalenceTable> {
    let mut rows = Vec::new();
    for spec in specs {
        rows.extend(run_equivalence_suite(spec)?.rows);
    }
    Ok(EquivalenceTable {
        name: "suite".to_string(),
        rows,
    })
}

fn heat_config(n: usize) -> OperatorConfig {
    OperatorConfig {
        p: vec![n],
        a0: (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(),
        b: vec![],
    }
}

fn kolmogorov_config() -> OperatorConfig {
    OperatorConfig {
        p: vec![1, 1],
        a0: vec![vec![1.0]],
        b: vec![vec![vec![1.0]]],
    }
}

fn p21_config() -> OperatorConfig {
    OperatorConfig {
        p: vec![2, 1],
        a0: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        b: vec![vec![vec![1.0], vec![0.0]]],
    }
}

fn punctured_ball(n: usize) -> Shape {
    Shape::Puncture {
        children: vec![Shape::ball(&vec![0.0; n], 1.0)],
        point: vec![0.0; n],
        radius: 0.0,
    }
}

/// The reference case list: classical heat cases with known verdicts in two
/// and three dimensions, and degenerate-operator box faces transverse to the
/// diffusion direction, where the two probes are only required to agree.
pub fn gold_suite(paths: usize, samples_per_k: usize, kmax: usize, seed: u64) -> Vec<ExperimentSpec> {
    let solver = SolverConfig {
        dt_base: 5e-4,
        dt_min: 1e-8,
        max_steps: 400_000,
        paths,
        seed: 0,
        shrink_factor: 0.5,
    };
    let criterion = CriterionParams {
        mu: 0.5,
        kmax,
        samples_per_k,
        seed: 0,
    };
    let probe = ProbeConfig::default();

    let mk = |name: &str,
              operator: OperatorConfig,
              domain: Shape,
              probes: Vec<ProbeCase>|
     -> ExperimentSpec {
        ExperimentSpec {
            name: name.to_string(),
            operator,
            domain,
            t_end: 1.0,
            probes,
            t0_fractions: vec![0.5],
            criterion: criterion.clone(),
            solver: solver.clone(),
            probe: probe.clone(),
            seed,
        }
    };

    vec![
        mk(
            "heat2-exterior-ball",
            heat_config(2),
            Shape::ball(&[0.0, 0.0], 1.0),
            vec![ProbeCase {
                x0: vec![1.0, 0.0],
                expected: ExpectedVerdict::Regular,
            }],
        ),
        mk(
            "heat2-punctured-ball",
            heat_config(2),
            punctured_ball(2),
            vec![ProbeCase {
                x0: vec![0.0, 0.0],
                expected: ExpectedVerdict::Irregular,
            }],
        ),
        mk(
            "heat2-halfspace-face",
            heat_config(2),
            Shape::Intersect {
                children: vec![
                    Shape::ball(&[0.0, 0.0], 1.0),
                    Shape::Halfspace {
                        normal: vec![1.0, 0.0],
                        offset: 0.0,
                    },
                ],
            },
            vec![ProbeCase {
                x0: vec![0.0, 0.0],
                expected: ExpectedVerdict::Regular,
            }],
        ),
        mk(
            "heat3-exterior-ball",
            heat_config(3),
            Shape::ball(&[0.0, 0.0, 0.0], 1.0),
            vec![ProbeCase {
                x0: vec![1.0, 0.0, 0.0],
                expected: ExpectedVerdict::Regular,
            }],
        ),
        mk(
            "heat3-punctured-ball",
            heat_config(3),
            punctured_ball(3),
            vec![ProbeCase {
                x0: vec![0.0, 0.0, 0.0],
                expected: ExpectedVerdict::Irregular,
            }],
        ),
        mk(
            "heat3-halfspace-face",
            heat_config(3),
            Shape::Intersect {
                children: vec![
                    Shape::ball(&[0.0, 0.0, 0.0], 1.0),
                    Shape::Halfspace {
                        normal: vec![1.0, 0.0, 0.0],
                        offset: 0.0,
                    },
                ],
            },
            vec![ProbeCase {
                x0: vec![0.0, 0.0, 0.0],
                expected: ExpectedVerdict::Regular,
            }],
        ),
        mk(
            "kolmogorov-box-faces",
            kolmogorov_config(),
            Shape::cube(-1.0, 1.0, 2),
            vec![
                ProbeCase {
                    x0: vec![1.0, 0.0],
                    expected: ExpectedVerdict::Unknown,
                },
                ProbeCase {
                    x0: vec![-1.0, 0.3],
                    expected: ExpectedVerdict::Unknown,
                },
            ],
        ),
        mk(
            "kolmogorov-exterior-cone",
            kolmogorov_config(),
            // ball with a solid cone removed; the complement holds a cone
            // with its apex at the probe point, opening into the diffusive
            // direction
            Shape::Intersect {
                children: vec![
                    Shape::ball(&[0.0, 0.0], 1.0),
                    Shape::Complement {
                        children: vec![Shape::Cone {
                            apex: vec![0.0, 0.0],
                            axis: vec![1.0, 0.0],
                            slope: 0.5,
                            height: 0.8,
                            weights: None,
                        }],
                    },
                ],
            },
            vec![ProbeCase {
                x0: vec![0.0, 0.0],
                expected: ExpectedVerdict::Unknown,
            }],
        ),
        mk(
            "p21-box-face",
            p21_config(),
            Shape::cube(-1.0, 1.0, 3),
            vec![ProbeCase {
                x0: vec![1.0, 0.0, 0.0],
                expected: ExpectedVerdict::Unknown,
            }],
        ),
    ]
}
