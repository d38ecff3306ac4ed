//! The experiment suites. Each runs on seeded generated instances and returns
//! its checks, a JSON result block and CSV side-tables.

use crate::config::{Config, Suite};
use crate::generator::{gen_pair, GenError};
use crate::report::{Check, SuiteReport, Table};
use serde::Serialize;
use serde_json::json;
use std::f64::consts::{PI, SQRT_2};
use wacpair_core::algebra::identity;
use wacpair_core::algebra::{
    kron, lambda_max, leibniz_residuals, norm, resolvent_commutator_identities, sigma1, sigma2,
    sigma3,
};
use wacpair_core::certifier::{
    certify_wac, graph_norm_constant, verify_certificate, Objective, WacCertificate,
};
use wacpair_core::clifford::{
    doubled_resolvent_residuals, transform_pair, verify_section5_relations,
};
use wacpair_core::dunford::{dunford_residual, refinement_check, residual_sweep, ResidualSweep};
use wacpair_core::kk::{
    arctan_abs_quadrature, form_bound, k_mu_identities, r_mu_identity, rescale_for_kappa,
    RescaleStatus,
};
use wacpair_core::square_sum::{
    default_epsilon_grid, interpolation_grid, kato_rellich_margin, square_sum_check,
    RelativeBoundCurve, DEFAULT_IM_GRID, DEFAULT_RE_GRID,
};
use wacpair_core::sum_engine::{
    convergence_sweep, default_lambda_grid, factorization_residual, fundamental_bounds,
    mu0_threshold, LambdaRule, ResolventNetReport,
};
use wacpair_core::{SelfAdjointOperator, Sign, C64};

type Pair = (SelfAdjointOperator, SelfAdjointOperator);
type Outcome<T> = Result<T, String>;

/// Evaluates `f(0..n)` on up to `threads` scoped threads; results keep index order.
pub fn par_map<T: Send>(n: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|sc| {
        for (ci, slots) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            sc.spawn(move || {
                for (j, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(f(ci * chunk + j));
                }
            });
        }
    });
    out.into_iter()
        .map(|v| v.expect("every slot is filled"))
        .collect()
}

pub struct Runner<'a> {
    pub config: &'a Config,
    pub threads: usize,
}

impl Runner<'_> {
    pub fn instance(&self, i: usize) -> Result<Pair, GenError> {
        let mut spec = self.config.generator.clone();
        spec.seed = self.config.experiment.seed.wrapping_add(i as u64);
        gen_pair(&spec)
    }

    fn instances(&self, suite: Suite) -> Result<Vec<Pair>, GenError> {
        (0..self.config.instances(suite))
            .map(|i| self.instance(i))
            .collect()
    }

    pub fn run(&self, suite: Suite) -> Result<SuiteReport, GenError> {
        let pairs = self.instances(suite)?;
        Ok(match suite {
            Suite::Identities => identities(self, &pairs),
            Suite::Certify => certify(self, &pairs),
            Suite::SumConverge => sum_converge(self, &pairs),
            Suite::Clifford => clifford(self, &pairs),
            Suite::SquareSum => square_sum(self, &pairs),
            Suite::Dunford => dunford(self, &pairs),
            Suite::KkCheck => kk_check(self, &pairs),
        })
    }

    fn map<T: Send>(
        &self,
        pairs: &[Pair],
        f: impl Fn(usize, &Pair) -> Outcome<T> + Sync,
    ) -> (Vec<T>, Vec<Check>) {
        let results = par_map(pairs.len(), self.threads, |i| f(i, &pairs[i]));
        let mut ok = Vec::with_capacity(results.len());
        let mut errors = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => ok.push(v),
                Err(e) => errors.push(Check::flag(format!("instance {i}: {e}"), false)),
            }
        }
        (ok, errors)
    }
}

fn fmax(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN-propagating maximum so that a NaN residual fails its check
    it.into_iter().fold(f64::NEG_INFINITY, |a: f64, b| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.max(b)
        }
    })
}

fn fmin(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::INFINITY, |a: f64, b| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.min(b)
        }
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn sa(m: wacpair_core::Mat) -> SelfAdjointOperator {
    SelfAdjointOperator::scalar_module(m).expect("hermitian fixture")
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub a_lambda_factorization: f64,
    pub k_mu: f64,
    pub r_mu: f64,
    pub block_form: f64,
    pub clifford_relations: f64,
    pub doubled_resolvent: f64,
    pub leibniz: f64,
    pub resolvent_commutator: f64,
}

impl IdentityRow {
    const HEADER: [&'static str; 9] = [
        "instance",
        "a_lambda_factorization",
        "k_mu",
        "r_mu",
        "block_form",
        "clifford_relations",
        "doubled_resolvent",
        "leibniz",
        "resolvent_commutator",
    ];

    fn values(&self) -> [f64; 8] {
        [
            self.a_lambda_factorization,
            self.k_mu,
            self.r_mu,
            self.block_form,
            self.clifford_relations,
            self.doubled_resolvent,
            self.leibniz,
            self.resolvent_commutator,
        ]
    }
}

fn identity_row((s, t): &Pair) -> Outcome<IdentityRow> {
    let mut fact = Vec::new();
    for l in [1.0, 10.0, 100.0] {
        let (r, scale) = factorization_residual(s, t, im(l)).map_err(err)?;
        fact.push(r / scale);
    }
    let mut kmu = Vec::new();
    let mut rmu = Vec::new();
    for mu in [0.1, 1.0, 10.0] {
        kmu.push(k_mu_identities(s, t, mu).map_err(err)?.max_relative());
        let r = r_mu_identity(s, t, mu).map_err(err)?;
        rmu.push(r.residual / r.scale);
    }
    let block = verify_section5_relations(s, t).map_err(err)?.max_relative();
    let mut cliff = Vec::new();
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        cliff.extend(
            transform_pair(s, t, i, j, Sign::Plus)
                .map_err(err)?
                .relation_residuals,
        );
    }
    let mut doubled = Vec::new();
    for op in [s, t] {
        for i in 1..=3 {
            for l in [im(3.0), C64::new(0.5, 1.0)] {
                doubled.extend(doubled_resolvent_residuals(op, i, l).map_err(err)?);
            }
        }
    }
    let st = s.matrix() * t.matrix();
    let mut leib = Vec::new();
    for sigma in [Sign::Plus, Sign::Minus] {
        for tau in [Sign::Plus, Sign::Minus] {
            for (r, scale) in leibniz_residuals(s.matrix(), t.matrix(), &st, sigma, tau) {
                leib.push(r / scale.max(f64::MIN_POSITIVE));
            }
        }
    }
    let mut resc = Vec::new();
    for tau in [Sign::Plus, Sign::Minus] {
        for l in [im(1.0), C64::new(2.0, 1.0)] {
            for (a, b) in [(s, t), (t, s)] {
                let r = resolvent_commutator_identities(a.operator(), b.operator(), l, tau)
                    .map_err(err)?;
                resc.push(r.max_relative());
            }
        }
    }
    Ok(IdentityRow {
        a_lambda_factorization: fmax(fact),
        k_mu: fmax(kmu),
        r_mu: fmax(rmu),
        block_form: block,
        clifford_relations: fmax(cliff),
        doubled_resolvent: fmax(doubled),
        leibniz: fmax(leib),
        resolvent_commutator: fmax(resc),
    })
}

fn identities(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let tol = run.config.experiment.tol;
    let (rows, mut checks) = run.map(pairs, |_, p| identity_row(p));
    let mut table = Table::new("residuals", &IdentityRow::HEADER);
    for (i, r) in rows.iter().enumerate() {
        let mut row = vec![i as f64];
        row.extend(r.values());
        table.rows.push(row);
    }
    let mut maxima = serde_json::Map::new();
    for (k, name) in IdentityRow::HEADER[1..].iter().enumerate() {
        let m = fmax(rows.iter().map(|r| r.values()[k]));
        checks.push(Check::le(format!("{name} relative residual"), m, tol));
        maxima.insert(name.to_string(), json!(m));
    }
    SuiteReport::new(
        Suite::Identities,
        pairs.len(),
        checks,
        json!({ "max_relative": maxima }),
        vec![table],
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CertifyRow {
    pub certificates: Vec<WacCertificate>,
    pub relative_slacks: Vec<f64>,
    pub graph_constant: f64,
    pub graph_relative_slack: f64,
    pub easy_relative_slack: f64,
}

fn certify(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let (rows, mut checks) = run.map(pairs, |_, (s, t)| {
        let mut certificates = Vec::new();
        let mut relative_slacks = Vec::new();
        for sign in [Sign::Plus, Sign::Minus] {
            let cert = certify_wac(s, t, sign, Objective::default()).map_err(err)?;
            let rep = verify_certificate(s, t, &cert, 1e-10).map_err(err)?;
            relative_slacks.push(rep.slack / rep.scale.max(f64::MIN_POSITIVE));
            certificates.push(cert);
        }
        let g = graph_norm_constant(s, t).map_err(err)?;
        Ok(CertifyRow {
            certificates,
            relative_slacks,
            graph_constant: g.constant,
            graph_relative_slack: g.upper_slack.min(g.lower_slack) / g.scale,
            easy_relative_slack: g.easy_slack / g.scale,
        })
    });
    checks.push(Check::ge(
        "certificate slack / scale",
        fmin(rows.iter().flat_map(|r| r.relative_slacks.iter().copied())),
        -1e-10,
    ));
    checks.push(Check::ge(
        "graph-norm pencil slack / scale",
        fmin(rows.iter().map(|r| r.graph_relative_slack)),
        -1e-8,
    ));
    checks.push(Check::ge(
        "factor-2 bound slack / scale",
        fmin(rows.iter().map(|r| r.easy_relative_slack)),
        -1e-8,
    ));
    let pauli = certify_wac(
        &sa(sigma1()),
        &sa(sigma2()),
        Sign::Plus,
        Objective::default(),
    );
    let pauli_json = match &pauli {
        Ok(c) => {
            checks.push(Check::le(
                "pauli certificate size",
                fmax([c.c0, c.c1, c.c2, c.slack.abs()]),
                1e-12,
            ));
            json!(c)
        }
        Err(e) => {
            checks.push(Check::flag(format!("pauli certificate: {e}"), false));
            json!(null)
        }
    };
    let mut table = Table::new(
        "certificates",
        &["instance", "sign", "c0", "c1", "c2", "slack", "lambda0"],
    );
    for (i, r) in rows.iter().enumerate() {
        for c in &r.certificates {
            table.rows.push(vec![
                i as f64,
                c.sign.value(),
                c.c0,
                c.c1,
                c.c2,
                c.slack,
                c.lambda0.unwrap_or(f64::NAN),
            ]);
        }
    }
    SuiteReport::new(
        Suite::Certify,
        pairs.len(),
        checks,
        json!({ "pauli": pauli_json, "instances": rows }),
        vec![table],
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub mu0: Option<f64>,
    /// `max |mu| |(A_l+mu)^-1|`, `|S(A_l+mu)^-1|`, `|T(A_l+mu)^-1|`, `|(TS/l)(A_l+mu)^-1|`.
    pub bound_maxima: [f64; 4],
    pub ts_norm: f64,
    pub net: ResolventNetReport,
    /// Residual at the largest `|l|` over the residual at the smallest.
    pub residual_ratio: f64,
}

fn sum_converge(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let mu_grid = &run.config.sum_converge.mu_grid;
    let rule = LambdaRule::default();
    let (rows, mut checks) = run.map(pairs, |_, (s, t)| {
        let cert = certify_wac(s, t, Sign::Plus, Objective::default()).map_err(err)?;
        let m = mu0_threshold(s, t, &cert, mu_grid, rule, 1e-8).map_err(err)?;
        let mut maxima = [f64::NAN; 4];
        if let Some(mu0) = m.mu0 {
            maxima = [0.0; 4];
            for mu_abs in [mu0, 10.0 * mu0] {
                let mu = im(mu_abs);
                for l in rule.lambdas(mu) {
                    let b = fundamental_bounds(s, t, &cert, l, mu, 1e-8).map_err(err)?;
                    let vals = [b.inv_norm * mu_abs, b.s_norm, b.t_norm, b.ts_norm];
                    for (m, v) in maxima.iter_mut().zip(vals) {
                        *m = fmax([*m, v]);
                    }
                }
            }
        }
        let mu = im(m.mu0.unwrap_or(1.0).max(1.0));
        let net = convergence_sweep(s, t, mu, &default_lambda_grid(mu)).map_err(err)?;
        let first = net.entries.first().map_or(f64::NAN, |e| e.residual);
        let last = net.entries.last().map_or(f64::NAN, |e| e.residual);
        Ok(ConvergenceRow {
            mu0: m.mu0,
            bound_maxima: maxima,
            ts_norm: norm(&(t.matrix() * s.matrix())),
            residual_ratio: last / first,
            net,
        })
    });
    checks.push(Check::flag(
        "mu0 found on every instance",
        rows.iter().all(|r| r.mu0.is_some()),
    ));
    let names = [
        "|mu| |(A_l+mu)^-1|",
        "|S (A_l+mu)^-1|",
        "|T (A_l+mu)^-1|",
        "|(TS/l) (A_l+mu)^-1|",
    ];
    let bounds = [SQRT_2 + 1e-8, SQRT_2 + 1e-8, SQRT_2 + 1e-8, 1.0 + 1e-8];
    for k in 0..4 {
        checks.push(Check::le(
            names[k],
            fmax(rows.iter().map(|r| r.bound_maxima[k])),
            bounds[k],
        ));
    }
    let nonzero: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.ts_norm > 0.0).collect();
    let rates: Vec<f64> = nonzero
        .iter()
        .map(|r| r.net.fitted_rate.unwrap_or(f64::NAN))
        .collect();
    checks.push(Check::le(
        "fitted rate (max)",
        fmax(rates.iter().copied()),
        -0.85,
    ));
    checks.push(Check::ge(
        "fitted rate (min)",
        fmin(rates.iter().copied()),
        -1.15,
    ));
    checks.push(Check::le(
        "residual ratio 10^6|mu| vs 10|mu|",
        fmax(nonzero.iter().map(|r| r.residual_ratio)),
        1e-4,
    ));
    let mut header = vec!["instance"];
    header.extend(ResolventNetReport::CSV_HEADER);
    let mut table = Table::new("resolvent_net", &header);
    for (i, r) in rows.iter().enumerate() {
        for row in r.net.csv_rows() {
            let mut v = vec![i as f64];
            v.extend(row);
            table.rows.push(v);
        }
    }
    SuiteReport::new(
        Suite::SumConverge,
        pairs.len(),
        checks,
        json!({ "instances": rows }),
        vec![table],
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct TransferRow {
    pub original: [f64; 3],
    pub transformed: [f64; 3],
    pub relative_difference: f64,
    pub relation_residual: f64,
}

fn clifford(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let (rows, mut checks) = run.map(pairs, |_, (s, t)| {
        let p = transform_pair(s, t, 1, 2, Sign::Plus).map_err(err)?;
        let a = certify_wac(s, t, Sign::Plus, Objective::default()).map_err(err)?;
        let b = certify_wac(&p.s_i, &p.t_j, Sign::Minus, Objective::default()).map_err(err)?;
        let total = (a.c0 + a.c1 + a.c2).max(f64::MIN_POSITIVE);
        let diff = fmax([
            (a.c0 - b.c0).abs(),
            (a.c1 - b.c1).abs(),
            (a.c2 - b.c2).abs(),
        ]);
        Ok(TransferRow {
            original: [a.c0, a.c1, a.c2],
            transformed: [b.c0, b.c1, b.c2],
            relative_difference: diff / total,
            relation_residual: fmax(p.relation_residuals),
        })
    });
    checks.push(Check::le(
        "certificate transfer relative difference",
        fmax(rows.iter().map(|r| r.relative_difference)),
        1e-9,
    ));
    checks.push(Check::le(
        "parity relation residual",
        fmax(rows.iter().map(|r| r.relation_residual)),
        1e-13,
    ));
    let mut table = Table::new(
        "transfer",
        &["instance", "c0", "c1", "c2", "c0_t", "c1_t", "c2_t"],
    );
    for (i, r) in rows.iter().enumerate() {
        let mut v = vec![i as f64];
        v.extend(r.original);
        v.extend(r.transformed);
        table.rows.push(v);
    }
    SuiteReport::new(
        Suite::Clifford,
        pairs.len(),
        checks,
        json!({ "instances": rows }),
        vec![table],
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SquareSumRow {
    pub p0_norm: f64,
    /// `max_z |P_z| / |P_0|` over the default grid.
    pub max_ratio: f64,
    pub all_hold: bool,
    pub identity_relative: f64,
    pub form_relative_slack: f64,
    pub graph_constant: f64,
    pub curve: RelativeBoundCurve,
    pub montecarlo_excess: f64,
}

fn square_sum(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let tol = run.config.experiment.tol;
    let (rows, mut checks) = run.map(pairs, |i, (s, t)| {
        let grid = interpolation_grid(s, t, &DEFAULT_RE_GRID, &DEFAULT_IM_GRID).map_err(err)?;
        let p0 = grid.iter().map(|p| p.p0_norm).next().unwrap_or(0.0);
        let max_ratio = if p0 > 0.0 {
            fmax(grid.iter().map(|p| p.norm / p0))
        } else {
            1.0
        };
        let cert = certify_wac(s, t, Sign::Plus, Objective::default()).map_err(err)?;
        let rep = square_sum_check(s, t, &cert).map_err(err)?;
        let curve =
            kato_rellich_margin(s, t, &default_epsilon_grid(), 200, i as u64).map_err(err)?;
        let montecarlo_excess = fmax(
            curve
                .samples
                .iter()
                .map(|x| (x.c_montecarlo - x.c_certified) / x.scale.max(f64::MIN_POSITIVE)),
        );
        Ok(SquareSumRow {
            p0_norm: p0,
            max_ratio,
            all_hold: grid.iter().all(|p| p.holds),
            identity_relative: rep.identity_residual / rep.scale,
            form_relative_slack: rep.form_slack / rep.scale,
            graph_constant: rep.graph_constant,
            curve,
            montecarlo_excess,
        })
    });
    checks.push(Check::le(
        "max |P_z| / |P_0|",
        fmax(rows.iter().map(|r| r.max_ratio)),
        1.0 + 1e-10,
    ));
    checks.push(Check::flag(
        "interpolation bound holds at every grid point",
        rows.iter().all(|r| r.all_hold),
    ));
    checks.push(Check::le(
        "square identity relative residual",
        fmax(rows.iter().map(|r| r.identity_relative)),
        tol,
    ));
    checks.push(Check::ge(
        "form chain slack / scale",
        fmin(rows.iter().map(|r| r.form_relative_slack)),
        -1e-9,
    ));
    checks.push(Check::le(
        "Monte Carlo bound above certified bound",
        fmax(rows.iter().map(|r| r.montecarlo_excess)),
        1e-9,
    ));
    let mut header = vec!["instance"];
    header.extend(RelativeBoundCurve::CSV_HEADER);
    let mut table = Table::new("relative_bound", &header);
    for (i, r) in rows.iter().enumerate() {
        for row in r.curve.csv_rows() {
            let mut v = vec![i as f64];
            v.extend(row);
            table.rows.push(v);
        }
    }
    SuiteReport::new(
        Suite::SquareSum,
        pairs.len(),
        checks,
        json!({ "instances": rows }),
        vec![table],
    )
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct DunfordRow {
    pub sweep: ResidualSweep,
    pub max_corrected_error: f64,
    pub refinement_passes: bool,
    pub refinement_changes: Vec<f64>,
}

/// `|R_10|` for `S = s3 x 1`, `T = 1 x s3` at the configured node count.
pub fn commuting_residual(nodes: usize) -> Result<f64, String> {
    let s = sa(kron(&sigma3(), &identity(2)));
    let t = sa(kron(&identity(2), &sigma3()));
    Ok(dunford_residual(&s, &t, 10.0, nodes).map_err(err)?.1.r_norm)
}

fn dunford(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let cfg = &run.config.dunford;
    let (rows, mut checks) = run.map(pairs, |_, (s, t)| {
        let sweep = residual_sweep(s, t, &cfg.lambdas, cfg.nodes).map_err(err)?;
        let max_corrected_error = fmax(
            sweep
                .rows
                .iter()
                .filter(|r| r.r_norm < 1.0)
                .map(|r| r.corrected_resolvent_error.unwrap_or(f64::NAN)),
        );
        let refinement = refinement_check(s, t, cfg.lambdas[0], 16, 4).map_err(err)?;
        Ok(DunfordRow {
            sweep,
            max_corrected_error,
            refinement_passes: refinement.passes,
            refinement_changes: refinement.changes,
        })
    });
    checks.push(Check::flag(
        "|R_l| < 1 reached on every instance",
        rows.iter().all(|r| r.sweep.threshold.is_some()),
    ));
    checks.push(Check::le(
        "corrected resolvent error",
        fmax(rows.iter().map(|r| r.max_corrected_error)),
        1e-6,
    ));
    checks.push(Check::flag(
        "quadrature refinement",
        rows.iter().all(|r| r.refinement_passes),
    ));
    // reference instances: commuting (closed form 2ST/(l^2+2)) and exactly anticommuting
    let commuting = commuting_residual(cfg.nodes);
    match &commuting {
        Ok(r) => checks.push(Check::le(
            "commuting pair |R_10| vs 2/102",
            (r - 2.0 / 102.0).abs(),
            1e-6,
        )),
        Err(e) => checks.push(Check::flag(format!("commuting pair: {e}"), false)),
    }
    match dunford_residual(&sa(sigma1()), &sa(sigma2()), 10.0, cfg.nodes) {
        Ok((_, r)) => checks.push(Check::le("anticommuting pair |R_10|", r.r_norm, 1e-10)),
        Err(e) => checks.push(Check::flag(format!("anticommuting pair: {e}"), false)),
    }
    let mut header = vec!["instance"];
    header.extend(ResidualSweep::CSV_HEADER);
    let mut table = Table::new("residual_sweep", &header);
    for (i, r) in rows.iter().enumerate() {
        for row in r.sweep.csv_rows() {
            let mut v = vec![i as f64];
            v.extend(row);
            table.rows.push(v);
        }
    }
    let results = json!({ "commuting_r_norm": commuting.ok(), "instances": rows });
    SuiteReport::new(Suite::Dunford, pairs.len(), checks, results, vec![table])
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct KkRow {
    pub rescale: wacpair_core::kk::RescaleReport,
    pub arctan_lambda_max: f64,
    pub form_bound_holds: bool,
    pub form_bound_constant: f64,
}

fn kk_check(run: &Runner, pairs: &[Pair]) -> SuiteReport {
    let kappa = run.config.kk.kappa;
    let (rows, mut checks) = run.map(pairs, |_, (s, t)| {
        let rescale = rescale_for_kappa(s, t, kappa).map_err(err)?;
        let d = s.sibling(s.matrix() + t.matrix()).map_err(err)?;
        let arctan = arctan_abs_quadrature(&d, 400).map_err(err)?;
        let fb = form_bound(s, t, &[0.1, 1.0, 10.0]).map_err(err)?;
        Ok(KkRow {
            rescale,
            arctan_lambda_max: lambda_max(&arctan),
            form_bound_holds: fb.holds,
            form_bound_constant: fb.constant,
        })
    });
    checks.push(Check::flag(
        "rescale succeeds on every instance",
        rows.iter()
            .all(|r| r.rescale.status == RescaleStatus::Success),
    ));
    checks.push(Check::ge(
        "lambda_min after rescaling",
        fmin(rows.iter().map(|r| r.rescale.lambda_min)),
        -kappa,
    ));
    checks.push(Check::le(
        "arctan integral lambda_max",
        fmax(rows.iter().map(|r| r.arctan_lambda_max)),
        PI / 2.0 + 1e-8,
    ));
    checks.push(Check::flag(
        "resolvent-sandwich bound holds",
        rows.iter().all(|r| r.form_bound_holds),
    ));
    let mut table = Table::new(
        "rescale",
        &[
            "instance",
            "t_star",
            "p0_at_t_star",
            "lambda_min",
            "lambda_min_corner",
            "lambda_min_adjusted",
        ],
    );
    for (i, r) in rows.iter().enumerate() {
        let x = &r.rescale;
        table.rows.push(vec![
            i as f64,
            x.t_star,
            x.p0_at_t_star,
            x.lambda_min,
            x.lambda_min_corner,
            x.lambda_min_adjusted,
        ]);
    }
    let results = json!({ "kappa": kappa, "epsilon": 2.0 * kappa / PI.powi(3), "instances": rows });
    SuiteReport::new(Suite::KkCheck, pairs.len(), checks, results, vec![table])
}
