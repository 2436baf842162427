//! The subcommands. Each one turns a loaded configuration into a [`Table`].

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use sparse_qi::analysis::{
    compare_budgets, corpus, energy_error_surrogate, fit_rate, kink_exponents, lq_error_on, ErrorLattice, TestFunction,
};
use sparse_qi::cubature::{apply_rule, assemble_weights, CubatureRule};
use sparse_qi::grids::{xi_for_budget, LevelRule};
use sparse_qi::recovery::build;
use sparse_qi::LevelSet;

use crate::config::{ConfigError, Loaded};
use crate::table::{Cell, Table};

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "config error: {e}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<sparse_qi::Error> for Failure {
    fn from(e: sparse_qi::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

/// A budget target resolved to its level set.
struct Grid {
    target: u64,
    xi: f64,
    delta: LevelSet,
}

fn budgets(loaded: &Loaded) -> Vec<u64> {
    let mut b = loaded.config.run.budgets.clone();
    b.sort_unstable();
    b.dedup();
    b
}

fn resolve(rule: &LevelRule, target: u64) -> Outcome<Grid> {
    let xi = xi_for_budget(target as u128, rule)?;
    Ok(Grid {
        target,
        xi,
        delta: rule.level_set(xi),
    })
}

fn grids(loaded: &Loaded, rule: &LevelRule) -> Outcome<Vec<Grid>> {
    budgets(loaded).into_par_iter().map(|n| resolve(rule, n)).collect()
}

fn functions(loaded: &Loaded) -> Vec<TestFunction> {
    let spec = &loaded.spec;
    let run = &loaded.config.run;
    if run.corpus.is_empty() {
        return corpus(spec);
    }
    let top = spec.r.get() as u32 - 1;
    run.corpus
        .iter()
        .map(|name| match name.as_str() {
            "poly_const" => TestFunction::monomial(vec![0; spec.d]),
            "poly_top" => TestFunction::monomial(vec![top; spec.d]),
            "sine" => TestFunction::sine_product(spec.d),
            "kink" => TestFunction::kink(kink_exponents(spec)),
            "lacunary" => TestFunction::lacunary(spec.d, run.lacunary_s),
            other => unreachable!("corpus name `{other}` checked on load"),
        })
        .collect()
}

fn lattice(loaded: &Loaded, delta: &LevelSet, f: &TestFunction) -> ErrorLattice {
    let run = &loaded.config.run;
    let d = delta.dim();
    match run.lattice.as_str() {
        "uniform" => ErrorLattice::uniform(run.resolution, d, run.offset),
        "graded" => ErrorLattice::graded(
            d,
            run.graded_level,
            &f.singular_points,
            run.graded_depth,
            run.graded_nodes,
        ),
        _ => ErrorLattice::auto(delta),
    }
}

fn finite(value: f64, what: &str, f: &TestFunction, n: u64) -> Outcome<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Failure::Numerical(format!(
            "{what} for `{}` at budget {n} is {value}",
            f.label
        )))
    }
}

/// Fitted slope of `log2 error` over `log2 n` for each prefix of `series`.
fn running_slopes(series: &[(f64, f64)]) -> Vec<Option<f64>> {
    (1..=series.len())
        .map(|m| {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for &(n, e) in &series[..m] {
                if pts.last().is_some_and(|&(pn, _)| pn == n) {
                    continue;
                }
                pts.push((n, e));
            }
            fit_rate(&pts).ok().map(|fit| fit.slope)
        })
        .collect()
}

pub fn gridinfo(loaded: &Loaded) -> Outcome<Table> {
    let rule = loaded.rule()?;
    let mut table = Table::new(vec![
        "config_hash",
        "family",
        "budget_target",
        "xi",
        "levels",
        "n_declared",
        "n_distinct",
        "nu",
        "ratio",
    ]);
    for g in grids(loaded, &rule)? {
        let n = g.delta.budget();
        table.push(vec![
            loaded.hash.as_str().into(),
            rule.family.to_string().into(),
            g.target.into(),
            g.xi.into(),
            g.delta.len().into(),
            n.into(),
            g.delta.distinct_points().into(),
            rule.nu.into(),
            (n as f64 * (-g.xi / rule.nu).exp2()).into(),
        ]);
    }
    Ok(table)
}

struct Measured {
    function: usize,
    grid: usize,
    n_samples: usize,
    error: f64,
    surrogate: Option<f64>,
}

pub fn recover(loaded: &Loaded) -> Outcome<Table> {
    let rule = loaded.rule()?;
    let grids = grids(loaded, &rule)?;
    let fns = functions(loaded);
    let spec = &loaded.spec;
    let jobs: Vec<(usize, usize)> = (0..grids.len())
        .flat_map(|g| (0..fns.len()).map(move |f| (f, g)))
        .collect();
    let measured: Vec<Measured> = jobs
        .into_par_iter()
        .map(|(fi, gi)| {
            let (f, g) = (&fns[fi], &grids[gi]);
            let rec = build(f.handle(), &g.delta, spec.r)?;
            let error = lq_error_on(f.handle(), &rec, spec.q, &lattice(loaded, &g.delta, f))?;
            let error = finite(error, "L_q error", f, g.target)?;
            let surrogate = match spec.gamma {
                Some(_) => {
                    let reference = rule.level_set(g.xi + loaded.config.run.reference_offset);
                    Some(finite(
                        energy_error_surrogate(f.handle(), &rec, spec, &reference)?,
                        "energy surrogate",
                        f,
                        g.target,
                    )?)
                }
                None => None,
            };
            Ok(Measured {
                function: fi,
                grid: gi,
                n_samples: rec.sample_budget,
                error,
                surrogate,
            })
        })
        .collect::<Outcome<_>>()?;

    let mut table = Table::new(vec![
        "config_hash",
        "family",
        "function",
        "budget_target",
        "xi",
        "levels",
        "n_declared",
        "n_samples",
        "error_q",
        "energy_surrogate",
        "predicted_exponent",
        "slope_so_far",
    ]);
    let by_function = group(&measured, |m| m.function);
    for (fi, rows) in by_function {
        let series: Vec<(f64, f64)> = rows
            .iter()
            .map(|m| (grids[m.grid].delta.budget() as f64, m.surrogate.unwrap_or(m.error)))
            .collect();
        let slopes = running_slopes(&series);
        for (m, slope) in rows.iter().zip(slopes) {
            let g = &grids[m.grid];
            table.push(vec![
                loaded.hash.as_str().into(),
                rule.family.to_string().into(),
                fns[fi].label.as_str().into(),
                g.target.into(),
                g.xi.into(),
                g.delta.len().into(),
                g.delta.budget().into(),
                m.n_samples.into(),
                m.error.into(),
                m.surrogate.into(),
                (-rule.nu).into(),
                slope.into(),
            ]);
        }
    }
    Ok(table)
}

fn group<T, K: Ord>(items: &[T], key: impl Fn(&T) -> K) -> BTreeMap<K, Vec<&T>> {
    let mut out: BTreeMap<K, Vec<&T>> = BTreeMap::new();
    for it in items {
        out.entry(key(it)).or_default().push(it);
    }
    out
}

pub fn integrate(loaded: &Loaded) -> Outcome<Table> {
    let rule = loaded.rule()?;
    let grids = grids(loaded, &rule)?;
    let fns = functions(loaded);
    let r = loaded.spec.r;
    let rules: Vec<CubatureRule> = grids.par_iter().map(|g| assemble_weights(&g.delta, r)).collect();
    let predicted = loaded.cubature_exponent(&rule);
    let mut table = Table::new(vec![
        "config_hash",
        "family",
        "function",
        "budget_target",
        "xi",
        "levels",
        "n_declared",
        "n_points",
        "integral",
        "exact",
        "error",
        "predicted_exponent",
        "slope_so_far",
    ]);
    for f in &fns {
        let mut values = Vec::with_capacity(grids.len());
        for (g, cub) in grids.iter().zip(&rules) {
            let v = finite(apply_rule(cub, f.handle()), "cubature value", f, g.target)?;
            values.push(v);
        }
        let series: Vec<(f64, f64)> = grids
            .iter()
            .zip(&values)
            .map(|(g, v)| (g.delta.budget() as f64, (f.exact_integral - v).abs()))
            .collect();
        let slopes = running_slopes(&series);
        for (((g, cub), v), slope) in grids.iter().zip(&rules).zip(&values).zip(slopes) {
            table.push(vec![
                loaded.hash.as_str().into(),
                rule.family.to_string().into(),
                f.label.as_str().into(),
                g.target.into(),
                g.xi.into(),
                g.delta.len().into(),
                g.delta.budget().into(),
                cub.len().into(),
                (*v).into(),
                f.exact_integral.into(),
                (f.exact_integral - v).abs().into(),
                predicted.into(),
                slope.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn compare(loaded: &Loaded) -> Outcome<Table> {
    let spec = &loaded.spec;
    let rule = spec.level_rule()?;
    let mut table = Table::new(vec![
        "config_hash",
        "budget_target",
        "xi",
        "n_anisotropic",
        "n_smolyak",
        "n_full",
        "smolyak_ratio",
        "full_ratio",
    ]);
    let rows: Vec<(u64, sparse_qi::analysis::BudgetComparison)> = budgets(loaded)
        .into_par_iter()
        .map(|n| {
            let xi = xi_for_budget(n as u128, &rule)?;
            let row = compare_budgets(spec, &[xi])?.remove(0);
            Ok((n, row))
        })
        .collect::<Outcome<_>>()?;
    for (n, c) in rows {
        table.push(vec![
            loaded.hash.as_str().into(),
            n.into(),
            c.xi.into(),
            c.anisotropic.into(),
            c.smolyak.into(),
            c.full.into(),
            c.smolyak_ratio().into(),
            c.full_ratio().into(),
        ]);
    }
    Ok(table)
}

fn single_grid(loaded: &Loaded, budget: Option<u64>) -> Outcome<(LevelRule, Grid)> {
    let rule = loaded.rule()?;
    let target = budget.unwrap_or_else(|| budgets(loaded)[0]);
    let grid = resolve(&rule, target)?;
    Ok((rule, grid))
}

pub fn export_rule(loaded: &Loaded, budget: Option<u64>) -> Outcome<Table> {
    let (_, g) = single_grid(loaded, budget)?;
    let cub = assemble_weights(&g.delta, loaded.spec.r);
    const COORDS: [&str; 8] = ["x_1", "x_2", "x_3", "x_4", "x_5", "x_6", "x_7", "x_8"];
    let d = cub.dim();
    if d > COORDS.len() {
        return Err(Failure::Numerical(format!(
            "rule export supports d <= {}, got {d}",
            COORDS.len()
        )));
    }
    let mut headers = COORDS[..d].to_vec();
    headers.extend(["weight", "config_hash"]);
    let mut table = Table::new(headers);
    for (p, &w) in &cub.weights {
        let mut row: Vec<Cell> = p.0.iter().map(|c| Cell::Text(c.to_decimal())).collect();
        row.push(w.into());
        row.push(loaded.hash.as_str().into());
        table.push(row);
    }
    Ok(table)
}

pub fn dump_grid(loaded: &Loaded, budget: Option<u64>) -> Outcome<String> {
    let (rule, g) = single_grid(loaded, budget)?;
    Ok(format!(
        "# config_hash={}\n# family={} budget_target={} xi={} n_declared={}\n{}",
        loaded.hash,
        rule.family,
        g.target,
        g.xi,
        g.delta.budget(),
        g.delta.to_text()
    ))
}

/// Two-column `n error` series per function, for external plotting.
pub fn plot_series(table: &Table, error_column: &str) -> BTreeMap<String, String> {
    let (Some(fc), Some(nc), Some(ec)) = (
        table.column("function"),
        table.column("n_declared"),
        table.column(error_column),
    ) else {
        return BTreeMap::new();
    };
    let mut out: BTreeMap<String, String> = BTreeMap::new();
    for row in &table.rows {
        let (Cell::Text(name), Cell::Int(n), Cell::Float(e)) = (&row[fc], &row[nc], &row[ec]) else {
            continue;
        };
        out.entry(name.clone())
            .or_insert_with(|| "# n error\n".into())
            .push_str(&format!("{n} {}\n", crate::table::format_float(*e)));
    }
    out
}
