//! Synthetic sibling-pair data.
//!
//! Every pair draws `U'`, `υ_c`, `υ_1`, `υ_2` from independent standard
//! normals. `C`, `T1` and `T2` are indicators of their linear index strictly
//! exceeding a threshold; `Y1` and `Y2` are linear with unit-variance noise;
//! `D = Y2 - Y1`. The linear indices use the edges of the scenario's
//! [`StructuralModel`], so the generator and the analytic engine share one
//! parameterization: the `U' <-> C` association enters `C`'s index as
//! `pi * U'`.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sem_graph::{build_scenario, topological_order, ScenarioConfig, ScenarioId, StructuralModel, Var};

/// One simulated dataset of sibling pairs, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub u_prime: Vec<f64>,
    pub upsilon_c: Vec<f64>,
    pub upsilon_1: Vec<f64>,
    pub upsilon_2: Vec<f64>,
    /// All zero when the scenario has no `C`.
    pub c: Vec<u8>,
    pub t1: Vec<u8>,
    pub t2: Vec<u8>,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub d: Vec<f64>,
}

/// The exogenous standard-normal columns of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousDraws {
    pub u_prime: Vec<f64>,
    pub upsilon_c: Vec<f64>,
    pub upsilon_1: Vec<f64>,
    pub upsilon_2: Vec<f64>,
}

impl ExogenousDraws {
    /// Draws the four columns in order `U'`, `υ_c`, `υ_1`, `υ_2`.
    pub fn sample<R: Rng + ?Sized>(n_obs: usize, rng: &mut R) -> Self {
        let mut column = || (0..n_obs).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let u_prime = column();
        let upsilon_c = column();
        let upsilon_1 = column();
        let upsilon_2 = column();
        Self { u_prime, upsilon_c, upsilon_1, upsilon_2 }
    }

    pub fn len(&self) -> usize {
        self.u_prime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_prime.is_empty()
    }
}

/// Random stream for replication `run` under master `seed`.
///
/// ChaCha is counter based: the stream depends only on `(seed, run)`, never on
/// which thread draws it or in what order replications execute.
pub fn replication_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

/// Simulates `config.n_obs` pairs from scenario `id`.
pub fn generate<R: Rng + ?Sized>(config: &ScenarioConfig, id: ScenarioId, rng: &mut R) -> Result<PairSample> {
    let model = build_scenario(id, config)?;
    let draws = ExogenousDraws::sample(config.n_obs, rng);
    generate_from_draws(&model, config, draws)
}

/// Simulates replication `run` of scenario `id` with its own stream.
pub fn generate_replication(config: &ScenarioConfig, id: ScenarioId, run: usize) -> Result<PairSample> {
    generate(config, id, &mut replication_rng(config.seed, run))
}

/// Evaluates the structural equations of `model` on fixed exogenous draws.
pub fn generate_from_draws(
    model: &StructuralModel,
    config: &ScenarioConfig,
    draws: ExogenousDraws,
) -> Result<PairSample> {
    let n = draws.len();
    for len in [draws.upsilon_c.len(), draws.upsilon_1.len(), draws.upsilon_2.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let order = topological_order(model)?;

    let mut columns: [Vec<f64>; 7] = Default::default();
    for v in order {
        let column = match v {
            Var::UPrime => draws.u_prime.clone(),
            Var::D => {
                let (y1, y2) = (&columns[Var::Y1.index()], &columns[Var::Y2.index()]);
                gain_scores(y1, y2)
            }
            _ => {
                let mut index = linear_index(model, &columns, v, n);
                let noise = match v {
                    Var::C => Some(&draws.upsilon_c),
                    Var::Y1 => Some(&draws.upsilon_1),
                    Var::Y2 => Some(&draws.upsilon_2),
                    _ => None,
                };
                if let Some(noise) = noise {
                    index.iter_mut().zip(noise).for_each(|(x, e)| *x += e);
                }
                if let Some(threshold) = threshold_for(config, v) {
                    index.iter_mut().for_each(|x| *x = if *x > threshold { 1.0 } else { 0.0 });
                }
                index
            }
        };
        columns[v.index()] = column;
    }

    let binary = |v: Var, columns: &mut [Vec<f64>; 7]| -> Vec<u8> {
        let col = std::mem::take(&mut columns[v.index()]);
        if col.is_empty() {
            vec![0; n]
        } else {
            col.into_iter().map(|x| x as u8).collect()
        }
    };
    let c = binary(Var::C, &mut columns);
    let t1 = binary(Var::T1, &mut columns);
    let t2 = binary(Var::T2, &mut columns);
    let [u_prime, _, _, _, y1, y2, d] = columns;

    Ok(PairSample {
        u_prime,
        upsilon_c: draws.upsilon_c,
        upsilon_1: draws.upsilon_1,
        upsilon_2: draws.upsilon_2,
        c,
        t1,
        t2,
        y1,
        y2,
        d,
    })
}

fn threshold_for(config: &ScenarioConfig, v: Var) -> Option<f64> {
    match v {
        Var::C => Some(config.threshold_c),
        Var::T1 => Some(config.threshold_t1),
        Var::T2 => Some(config.threshold_t2),
        _ => None,
    }
}

/// Sum of `coefficient * parent` over directed parents and over associations
/// with variables generated earlier.
fn linear_index(model: &StructuralModel, columns: &[Vec<f64>; 7], v: Var, n: usize) -> Vec<f64> {
    let mut index = vec![0.0; n];
    let terms = model
        .parents(v)
        .map(|e| (e.source, e.coefficient))
        .chain(model.bidirected_edges().iter().filter_map(|e| e.other(v).map(|o| (o, e.coefficient))));
    for (source, coefficient) in terms {
        let parent = &columns[source.index()];
        // An association partner not yet generated carries the term instead.
        if parent.is_empty() {
            continue;
        }
        index.iter_mut().zip(parent).for_each(|(x, p)| *x += coefficient * p);
    }
    index
}

/// Row-wise `y2 - y1`.
pub fn gain_scores(y1: &[f64], y2: &[f64]) -> Vec<f64> {
    y1.iter().zip(y2).map(|(a, b)| b - a).collect()
}

impl PairSample {
    pub fn n_obs(&self) -> usize {
        self.d.len()
    }

    /// Recomputes `y2 - y1`.
    pub fn gain_scores(&self) -> Vec<f64> {
        gain_scores(&self.y1, &self.y2)
    }

    /// Relabels the siblings: swaps treatments and outcomes and negates `d`.
    pub fn swap_siblings(&self) -> PairSample {
        PairSample {
            t1: self.t2.clone(),
            t2: self.t1.clone(),
            y1: self.y2.clone(),
            y2: self.y1.clone(),
            d: self.d.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }

    pub fn mean(column: &[f64]) -> f64 {
        column.iter().sum::<f64>() / column.len() as f64
    }

    pub fn proportion(column: &[u8]) -> f64 {
        column.iter().map(|&x| x as f64).sum::<f64>() / column.len() as f64
    }

    /// Writes `u_prime,c,t1,t2,y1,y2,d` rows with LF line endings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "u_prime,c,t1,t2,y1,y2,d")?;
        for i in 0..self.n_obs() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.u_prime[i], self.c[i], self.t1[i], self.t2[i], self.y1[i], self.y2[i], self.d[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(cfg: ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig { n_obs: 2000, ..cfg }
    }

    #[test]
    fn invariants_hold() {
        let cfg = small(ScenarioConfig { eta: 0.3, pi: 0.5, ..ScenarioConfig::baseline() });
        for id in ScenarioId::ALL {
            let s = generate_replication(&cfg, id, 3).unwrap();
            assert_eq!(s.n_obs(), 2000);
            for i in 0..s.n_obs() {
                assert_eq!(s.d[i], s.y2[i] - s.y1[i]);
                assert!(s.c[i] <= 1 && s.t1[i] <= 1 && s.t2[i] <= 1);
            }
            let band = 5.0 / (s.n_obs() as f64).sqrt();
            for col in [&s.u_prime, &s.upsilon_c, &s.upsilon_1, &s.upsilon_2] {
                assert!(PairSample::mean(col).abs() < band);
            }
            if !id.has_c() {
                assert!(s.c.iter().all(|&c| c == 0));
            }
        }
    }

    #[test]
    fn deterministic_per_seed_and_run() {
        let cfg = small(ScenarioConfig::baseline());
        let a = generate_replication(&cfg, ScenarioId::Fig2B, 7).unwrap();
        let b = generate_replication(&cfg, ScenarioId::Fig2B, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_replication(&cfg, ScenarioId::Fig2B, 8).unwrap();
        assert_ne!(a.u_prime, c.u_prime);
    }

    #[test]
    fn equations_match_hand_evaluation() {
        let cfg = ScenarioConfig { pi: 0.5, eta: 0.3, tau: 0.7, nu: 1.5, n_obs: 200, ..ScenarioConfig::baseline() };
        let s = generate_replication(&cfg, ScenarioId::Fig2B, 0).unwrap();
        for i in 0..s.n_obs() {
            let u = s.u_prime[i];
            let c = (0.5 * u + s.upsilon_c[i] > 1.0) as u8;
            let t1 = (0.7 * c as f64 + u > -0.2) as u8;
            let t2 = (1.5 * c as f64 + 2.0 * u > 1.0) as u8;
            let y1 = 3.0 * t1 as f64 + 5.0 * u + s.upsilon_1[i];
            let y2 = 3.0 * t2 as f64 + 0.3 * y1 + 5.0 * u + s.upsilon_2[i];
            assert_eq!((s.c[i], s.t1[i], s.t2[i]), (c, t1, t2));
            assert!((s.y1[i] - y1).abs() < 1e-12);
            assert!((s.y2[i] - y2).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_zero_coefficients_gives_zero_outcomes() {
        let cfg = ScenarioConfig { n_obs: 100, ..Default::default() };
        let model = build_scenario(ScenarioId::Fig1D, &cfg).unwrap();
        let mut draws = ExogenousDraws::sample(100, &mut replication_rng(1, 0));
        draws.upsilon_1 = vec![0.0; 100];
        draws.upsilon_2 = vec![0.0; 100];
        let s = generate_from_draws(&model, &cfg, draws).unwrap();
        assert!(s.y1.iter().chain(&s.y2).chain(&s.d).all(|&x| x == 0.0));
        // 0 > -0.2 always holds.
        assert!(s.t1.iter().all(|&t| t == 1));
        assert!(s.t2.iter().all(|&t| t == 0));
    }

    #[test]
    fn gain_score_definition() {
        assert_eq!(gain_scores(&[1.0, 2.0], &[3.0, 3.0]), vec![2.0, 1.0]);
        assert_eq!(gain_scores(&[1.5, -2.0], &[1.5, -2.0]), vec![0.0, 0.0]);
        let s = generate_replication(&small(ScenarioConfig::baseline()), ScenarioId::Fig1D, 0).unwrap();
        assert_eq!(s.gain_scores(), s.d);
        for i in 0..s.n_obs() {
            assert!((s.d[i] + s.y1[i] - s.y2[i]).abs() <= 1e-12 * s.y2[i].abs().max(1.0));
        }
    }

    #[test]
    fn swap_siblings_negates_gain() {
        let s = generate_replication(&small(ScenarioConfig::baseline()), ScenarioId::Fig1D, 0).unwrap();
        let w = s.swap_siblings();
        assert_eq!(w.t1, s.t2);
        assert_eq!(w.y2, s.y1);
        assert!(w.d.iter().zip(&s.d).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn csv_header_and_rows() {
        let cfg = ScenarioConfig { n_obs: 3, ..ScenarioConfig::baseline() };
        let s = generate_replication(&cfg, ScenarioId::Fig1D, 0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "u_prime,c,t1,t2,y1,y2,d");
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
    }
}
