//! One function per subcommand.

use std::fs::File;
use std::io::BufWriter;

use anyhow::Result;
use pmlab_core::dist::{Law, MessageKind, TabulatedCdf};
use pmlab_core::pwit::{self, Boundary, RootStats};
use pmlab_core::rde::{estimate_alpha_from_samples, solve_rde};
use pmlab_core::rng::{derive_seed, domain, stream};
use pmlab_core::simulate::{self, Summary};
use pmlab_core::stats::ks_one_sample_sorted;
use pmlab_core::{bounds, ode, Error};

use crate::output::{sibling, sig, Csv, Manifest};
use crate::{AlphaArgs, BoundArgs, BoundarySource, PwitArgs, RdeArgs, SimulateArgs};

fn bad(msg: impl Into<String>) -> anyhow::Error {
    Error::Parameter(msg.into()).into()
}

fn lambda_grid(a: &AlphaArgs) -> Result<Vec<f64>> {
    if a.steps < 1 {
        return Err(bad("steps must be at least 1"));
    }
    if !(a.lambda_min > 0.0 && a.lambda_min <= a.lambda_max) {
        return Err(bad(format!(
            "need 0 < lambda-min <= lambda-max, got {} and {}",
            a.lambda_min, a.lambda_max
        )));
    }
    if a.steps > 1 && a.lambda_min == a.lambda_max {
        return Err(bad("several steps need lambda-min < lambda-max"));
    }
    if a.lambda_max >= 4.0 {
        return Err(Error::NoSolution { lambda: a.lambda_max }.into());
    }
    if a.steps == 1 {
        return Ok(vec![a.lambda_min]);
    }
    let span = a.lambda_max - a.lambda_min;
    Ok((0..a.steps)
        .map(|i| a.lambda_min + span * i as f64 / (a.steps - 1) as f64)
        .collect())
}

pub fn alpha(a: &AlphaArgs) -> Result<()> {
    let lambdas = lambda_grid(a)?;
    let mc = a.mc_n.zip(a.mc_trials);
    let mut csv = Csv::new(&[
        "lambda",
        "epsilon0",
        "alpha_ode",
        "beta_p",
        "beta_u",
        "alpha_mc",
        "alpha_mc_stderr",
        "n_mc",
        "trials",
    ]);
    for (i, &lambda) in lambdas.iter().enumerate() {
        let sol = ode::solve(lambda)?;
        let mut row = vec![
            sig(lambda),
            sig(sol.epsilon0),
            sig(sol.alpha),
            sig(sol.beta_p),
            sig(sol.beta_u),
        ];
        match mc {
            Some((n, trials)) => {
                let outcomes = simulate::run_trials(n, lambda, trials, derive_seed(a.seed, i as u64))?;
                let s = Summary::of(&outcomes);
                row.extend([sig(s.overlap.mean), sig(s.overlap.stderr), n.to_string(), trials.to_string()]);
            }
            None => row.extend([String::new(), String::new(), String::new(), String::new()]),
        }
        csv.row(row);
    }
    csv.write(&a.out)?;
    let mut m = Manifest::new("alpha", mc.map(|_| a.seed));
    m.param("lambda_min", a.lambda_min)
        .param("lambda_max", a.lambda_max)
        .param("steps", a.steps)
        .param("mc_n", a.mc_n)
        .param("mc_trials", a.mc_trials);
    m.outputs.push(a.out.clone());
    m.write()?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(bad(format!("lambda must be positive, got {}", a.lambda)));
    }
    let outcomes = simulate::run_trials(a.n, a.lambda, a.trials, a.seed)?;
    let mut csv = Csv::new(&["trial", "overlap", "weight_per_n", "sym_diff", "n_cycles"]);
    for o in &outcomes {
        csv.row([
            o.trial.to_string(),
            sig(o.overlap),
            sig(o.weight_per_n),
            o.sym_diff.to_string(),
            o.n_cycles.to_string(),
        ]);
    }
    let s = Summary::of(&outcomes);
    let cols = [s.overlap, s.weight_per_n, s.sym_diff, s.n_cycles];
    csv.row(std::iter::once("mean".to_string()).chain(cols.iter().map(|c| sig(c.mean))));
    csv.row(std::iter::once("stderr".to_string()).chain(cols.iter().map(|c| sig(c.stderr))));
    csv.write(&a.out)?;
    let mut m = Manifest::new("simulate", Some(a.seed));
    m.param("n", a.n).param("lambda", a.lambda).param("trials", a.trials);
    m.outputs.push(a.out.clone());
    m.write()?;
    Ok(())
}

pub fn rde(a: &RdeArgs) -> Result<()> {
    let run = solve_rde(a.lambda, a.pool, a.iters, a.seed)?;
    let x = run.pool.x_distribution();
    let y = run.pool.y_distribution();

    let mut csv = Csv::new(&["quantile", "x", "y"]);
    for i in 1..1000 {
        let u = i as f64 / 1000.0;
        csv.row([sig(u), sig(x.quantile(u)), sig(y.quantile(u))]);
    }
    csv.write(&a.out)?;

    let trace_path = sibling(&a.out, ".trace.csv");
    let mut trace = Csv::new(&["iter", "ks_step", "ks_lag"]);
    let lag_start = run.trace.len() + 1 - run.lag_trace.len();
    for (k, d) in run.trace.iter().enumerate() {
        let iter = k + 1;
        let lag = if iter >= lag_start {
            sig(run.lag_trace[iter - lag_start])
        } else {
            String::new()
        };
        trace.row([iter.to_string(), sig(*d), lag]);
    }
    trace.write(&trace_path)?;

    let mut m = Manifest::new("rde", Some(a.seed));
    m.param("lambda", a.lambda)
        .param("pool", a.pool)
        .param("iters", a.iters)
        .param("draws", a.draws);
    m.outputs.push(a.out.clone());
    m.outputs.push(trace_path);
    if let Some(prefix) = &a.dump {
        for kind in ['X', 'Y'] {
            let path = sibling(prefix, &format!(".{kind}.txt"));
            run.pool.write_dump(kind, BufWriter::new(File::create(&path)?))?;
            m.outputs.push(path);
        }
    }
    m.write()?;

    let sol = ode::solve(a.lambda)?;
    let profile = sol.profile();
    let fx = TabulatedCdf::from_profile(&profile, MessageKind::X, 40.0);
    let fy = TabulatedCdf::from_profile(&profile, MessageKind::Y, 40.0);
    let ks_x = ks_one_sample_sorted(x.sorted_samples(), |t| fx.cdf(t));
    let ks_y = ks_one_sample_sorted(y.sorted_samples(), |t| fy.cdf(t));
    let (p, se) = estimate_alpha_from_samples(&x, a.lambda, a.draws, &mut stream(a.seed, domain::ESTIMATE));
    println!("converged_at={}", run.converged_at.map_or(String::new(), |k| k.to_string()));
    println!("ks_x_ode={}", sig(ks_x));
    println!("ks_y_ode={}", sig(ks_y));
    println!("p_x_positive={}", sig(x.survival(0.0)));
    println!("alpha_rde={}", sig(p));
    println!("alpha_rde_stderr={}", sig(se));
    println!("alpha_ode={}", sig(sol.alpha));
    Ok(())
}

pub fn pwit(a: &PwitArgs) -> Result<()> {
    if a.trials < 1 {
        return Err(bad("at least one trial is required"));
    }
    let sol = ode::solve(a.lambda)?;
    let stats = match a.boundary {
        BoundarySource::Ode => {
            let b = Boundary::from_profile(&sol.profile());
            pwit::estimate_root_overlap(a.lambda, a.depth, a.arity, a.trials, &b, a.seed)?
        }
        BoundarySource::Rde => {
            // Fail on an oversized tree before the expensive pool.
            pwit::build_tree_with_cap(a.lambda, a.depth, a.arity, pwit::NODE_CAP, &mut stream(0, 0))?;
            let run = solve_rde(a.lambda, a.pool, a.iters, derive_seed(a.seed, 1))?;
            let b = Boundary::from_pool(&run.pool);
            pwit::estimate_root_overlap(a.lambda, a.depth, a.arity, a.trials, &b, a.seed)?
        }
    };
    write_root_stats(a, &stats, sol.alpha)
}

fn write_root_stats(a: &PwitArgs, s: &RootStats, alpha_ode: f64) -> Result<()> {
    let mut csv = Csv::new(&[
        "lambda",
        "depth",
        "arity",
        "trials",
        "p_root_planted",
        "stderr",
        "degenerate",
        "degenerate_rate",
        "argmin_disagreements",
        "alpha_ode",
    ]);
    csv.row([
        sig(a.lambda),
        a.depth.to_string(),
        a.arity.to_string(),
        s.trials.to_string(),
        sig(s.p_root_planted),
        sig(s.stderr),
        s.degenerate.to_string(),
        sig(s.degenerate_rate()),
        s.argmin_disagreements.to_string(),
        sig(alpha_ode),
    ]);
    csv.write(&a.out)?;
    let mut m = Manifest::new("pwit", Some(a.seed));
    m.param("lambda", a.lambda)
        .param("depth", a.depth)
        .param("arity", a.arity)
        .param("trials", a.trials)
        .param(
            "boundary",
            match a.boundary {
                BoundarySource::Ode => "ode",
                BoundarySource::Rde => "rde",
            },
        );
    if a.boundary == BoundarySource::Rde {
        m.param("pool", a.pool).param("iters", a.iters);
    }
    m.outputs.push(a.out.clone());
    m.write()?;
    print!("{}", csv.as_str());
    Ok(())
}

pub fn bound(a: &BoundArgs) -> Result<()> {
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(bad(format!("lambda must be positive, got {}", a.lambda)));
    }
    if a.n < 1 {
        return Err(bad("n must be at least 1"));
    }
    let (sym, ratio) = if a.lambda >= 4.0 {
        let b = bounds::sym_diff_expectation_bound(a.lambda, a.n)?;
        (sig(b), sig(b / (a.n as f64).sqrt()))
    } else {
        (String::new(), String::new())
    };
    let lower = if a.lambda <= 4.0 {
        sig(bounds::overlap_lower_bound_small_lambda(a.lambda)?)
    } else {
        String::new()
    };
    let mut csv = Csv::new(&["lambda", "n", "sym_diff_bound", "sym_diff_bound_over_sqrt_n", "overlap_lower_bound"]);
    csv.row([sig(a.lambda), a.n.to_string(), sym, ratio, lower]);
    print!("{}", csv.as_str());
    if let Some(out) = &a.out {
        csv.write(out)?;
        let mut m = Manifest::new("bound", None);
        m.param("lambda", a.lambda).param("n", a.n);
        m.outputs.push(out.clone());
        m.write()?;
    }
    Ok(())
}
