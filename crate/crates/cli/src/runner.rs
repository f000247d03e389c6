//! Experiment dispatch: run a configured task, write its CSV outputs and the
//! manifest, and return the manifest.

use crate::config::{ExperimentConfig, MethodSel, Task};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::report;
use crate::verify;
use rayon::prelude::*;
use remlab_core::field::{sample_field, validate_field_spec, FieldSample};
use remlab_core::fmt_f64;
use remlab_core::gibbs::{gibbs_weights, pd_sample, weight_stats, PdParams};
use remlab_core::legendre::{asymptotic_solve, coupled_solve};
use remlab_core::mgf::limit_mgf_grid;
use remlab_core::process::{compare_stats, realize_process, ThinningSpec, Window};
use remlab_core::tail::{exact_tail, sharp_tail, tilted_tail, TailEstimate};
use std::time::Instant;

/// Execute the configured task. Identical config and seed produce
/// byte-identical CSV payloads regardless of thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest, CliError> {
    config.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(&config.out)?;
    let mut manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        task: config.task.name().to_string(),
        seed: config.seed,
        config_echo: config.to_text(),
        wall_clock_ms: 0,
        outputs: Vec::new(),
    };

    match config.task {
        Task::Moments => run_moments(config, &mut manifest)?,
        Task::Mgf => run_mgf(config, &mut manifest)?,
        Task::Solve => run_solve(config, &mut manifest)?,
        Task::Tail => run_tail(config, &mut manifest)?,
        Task::Process => run_process(config, &mut manifest)?,
        Task::Gibbs => run_gibbs(config, &mut manifest)?,
        Task::Verify => {
            // Exit-code handling for failed criteria happens in the caller;
            // the outputs and manifest are written either way.
            run_verify_task(config, &mut manifest)?;
        }
    }

    manifest.wall_clock_ms = start.elapsed().as_millis();
    manifest.write(&config.out)?;
    Ok(manifest)
}

/// Count of failed criteria recorded in a verify manifest's outputs; used by
/// the binary to pick the exit code.
pub fn verify_failures(
    manifest: &RunManifest,
    config: &ExperimentConfig,
) -> Result<usize, CliError> {
    if manifest.task != "verify" {
        return Ok(0);
    }
    let text = std::fs::read_to_string(config.out.join("verify.csv"))?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",false"))
        .count())
}

fn load_h_file(config: &ExperimentConfig) -> Result<FieldSample, CliError> {
    let path = config
        .h_file
        .as_ref()
        .ok_or_else(|| CliError::config("this task requires --h-file".into()))?;
    let text = std::fs::read_to_string(path)?;
    Ok(FieldSample::from_csv(&text, config.bias()?)?)
}

fn run_moments(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let ms = validate_field_spec(&config.field)?;
    let bias = config.bias()?;
    let mut csv = String::from("psi1,psi2,psi3,psi4,p_neg,varsigma,gamma\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        fmt_f64(ms.psi1),
        fmt_f64(ms.psi2),
        fmt_f64(ms.psi3),
        fmt_f64(ms.psi4),
        fmt_f64(ms.p_neg),
        fmt_f64(ms.varsigma(bias)),
        fmt_f64(ms.gamma(bias))
    ));
    manifest.record_output(&config.out, "moments.csv", &csv)?;
    Ok(())
}

fn run_mgf(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let bias = config.bias()?;
    let (lo, hi, steps) = config.lambda_grid;
    let rows = limit_mgf_grid(&config.field, bias, lo, hi, steps)?;
    let mut csv = String::from("lambda,G,G1,G2\n");
    for (lambda, e) in rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(lambda),
            fmt_f64(e.value),
            fmt_f64(e.d1),
            fmt_f64(e.d2)
        ));
    }
    manifest.record_output(&config.out, "mgf.csv", &csv)?;
    Ok(())
}

fn run_solve(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let h = load_h_file(config)?;
    let level = config
        .level
        .ok_or_else(|| CliError::config("solve requires --level (the rate level C)".into()))?;
    let sol = coupled_solve(&h, level, config.offset)?;
    let mut csv = String::from(
        "a_tilde,tilt_tilde,tilt_x,res_center,res_tilt,res_shift,c_minus,c_plus,a_minus,a_plus,clamped,asymptotic_n\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
        fmt_f64(sol.a_tilde),
        fmt_f64(sol.tilt_tilde),
        fmt_f64(sol.tilt_x),
        fmt_f64(sol.residuals[0]),
        fmt_f64(sol.residuals[1]),
        fmt_f64(sol.residuals[2]),
        fmt_f64(sol.bracket.c_minus),
        fmt_f64(sol.bracket.c_plus),
        fmt_f64(sol.bracket.a_minus),
        fmt_f64(sol.bracket.a_plus),
        sol.bracket.clamped,
        sol.bracket.asymptotic_n
    ));
    manifest.record_output(&config.out, "solve.csv", &csv)?;
    Ok(())
}

fn run_tail(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    if !config.n_grid.is_empty() {
        return run_tail_ratio_sweep(config, manifest);
    }
    let h = load_h_file(config)?;
    let a = config
        .a
        .ok_or_else(|| CliError::config("tail requires --a (the energy level)".into()))?;
    let est: TailEstimate = match config.method {
        MethodSel::Exact => exact_tail(&h, a)?,
        MethodSel::Tilted => tilted_tail(&h, a, config.samples, config.seed)?,
        MethodSel::Sharp => sharp_tail(&h, a)?,
    };
    let mut csv = String::from("method,value,stderr,meta\n");
    csv.push_str(&format!(
        "{},{},{},{}\n",
        est.method.name(),
        fmt_f64(est.value),
        fmt_f64(est.stderr),
        est.meta
    ));
    manifest.record_output(&config.out, "tail.csv", &csv)?;
    Ok(())
}

/// Size sweep of the sharp-approximation quality: one seeded disorder draw
/// per size, ratios exact/sharp at level fractions {0.3, 0.45, 0.6}.
fn run_tail_ratio_sweep(
    config: &ExperimentConfig,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let bias = config.bias()?;
    let mut csv = String::from("n,frac,exact,sharp,ratio\n");
    for (i, &n) in config.n_grid.iter().enumerate() {
        let h = sample_field(
            &config.field,
            bias,
            n,
            config.seed.wrapping_add(1 + i as u64),
        )?;
        for frac in [0.3, 0.45, 0.6] {
            let a = frac * h.sigma();
            let exact = exact_tail(&h, a)?.value;
            let sharp = sharp_tail(&h, a)?.value;
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                fmt_f64(frac),
                fmt_f64(exact),
                fmt_f64(sharp),
                fmt_f64(exact / sharp)
            ));
        }
    }
    manifest.record_output(&config.out, "ratio.csv", &csv)?;
    Ok(())
}

fn resolved_window(config: &ExperimentConfig, lambda: f64) -> Result<Window, CliError> {
    Ok(match config.window {
        Some((lo, hi)) => Window::new(lo, hi)?,
        None => Window::default_for(lambda),
    })
}

fn run_process(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let bias = config.bias()?;
    let thin = ThinningSpec::new(config.rho, bias, config.n)?;
    let asym = asymptotic_solve(&config.field, bias, thin.c)?;
    let window = resolved_window(config, asym.lambda_hat)?;

    let reals: Vec<Result<_, remlab_core::Error>> = (0..config.replicates as u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&r| {
            let h = sample_field(
                &config.field,
                bias,
                config.n,
                config.seed.wrapping_add(1 + r),
            )?;
            realize_process(&h, &thin, window, config.seed.wrapping_add(1_000_003 + r))
        })
        .collect();
    let mut realized = Vec::with_capacity(config.replicates);
    for r in reals {
        realized.push(r?);
    }

    let mut points_csv = String::from("replicate_id,point\n");
    for (i, real) in realized.iter().enumerate() {
        for &p in &real.points {
            points_csv.push_str(&format!("{},{}\n", i, fmt_f64(p)));
        }
    }
    manifest.record_output(&config.out, "points.csv", &points_csv)?;

    let stats = compare_stats(&realized, asym.lambda_hat, window, config.bins, &[0.5, 1.0])?;
    let mut stats_csv = String::from("bin,mean_count,predicted,dispersion,ks_stat,ks_p\n");
    for (i, bin) in stats.bins.iter().enumerate() {
        stats_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i,
            fmt_f64(bin.mean_count),
            fmt_f64(bin.predicted),
            fmt_f64(bin.dispersion.unwrap_or(f64::NAN)),
            fmt_f64(stats.ks.map(|k| k.stat).unwrap_or(f64::NAN)),
            fmt_f64(stats.ks.map(|k| k.p_value).unwrap_or(f64::NAN)),
        ));
    }
    manifest.record_output(&config.out, "stats.csv", &stats_csv)?;
    report::emit_report(manifest, &config.out)?;
    Ok(())
}

fn run_gibbs(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let bias = config.bias()?;
    let thin = ThinningSpec::new(config.rho, bias, config.n)?;
    let asym = asymptotic_solve(&config.field, bias, thin.c)?;
    let beta = config.beta.unwrap_or(2.5 * asym.lambda_hat);

    let weights: Vec<Result<_, remlab_core::Error>> = (0..config.replicates as u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&r| {
            let h = sample_field(
                &config.field,
                bias,
                config.n,
                config.seed.wrapping_add(1 + r),
            )?;
            gibbs_weights(&h, &thin, beta, config.seed.wrapping_add(1_000_003 + r))
        })
        .collect();
    let mut samples = Vec::with_capacity(config.replicates);
    for w in weights {
        samples.push(w?);
    }

    let mut weights_csv = String::from("replicate_id,rank,weight\n");
    for (i, w) in samples.iter().enumerate() {
        for (rank, &value) in w.weights().iter().enumerate() {
            weights_csv.push_str(&format!("{},{},{}\n", i, rank + 1, fmt_f64(value)));
        }
    }
    manifest.record_output(&config.out, "weights.csv", &weights_csv)?;

    let gs = weight_stats(&samples)?;
    let alpha = if beta > asym.lambda_hat {
        asym.lambda_hat / beta
    } else {
        f64::NAN
    };
    let mut pd_csv = String::from(
        "source,alpha,replicates,mean_sum_sq,se_sum_sq,mean_sum_cube,se_sum_cube,mean_top,se_top,empty_fraction\n",
    );
    pd_csv.push_str(&format!(
        "gibbs,{},{},{},{},{},{},{},{},{}\n",
        fmt_f64(alpha),
        gs.n,
        fmt_f64(gs.sum_sq.mean),
        fmt_f64(gs.sum_sq.stderr),
        fmt_f64(gs.sum_cube.mean),
        fmt_f64(gs.sum_cube.stderr),
        fmt_f64(gs.top.mean),
        fmt_f64(gs.top.stderr),
        fmt_f64(gs.empty_fraction)
    ));
    if alpha.is_finite() {
        let params = PdParams::from_temperature(asym.lambda_hat, beta)?;
        let pd: Vec<Result<_, remlab_core::Error>> = (0..config.replicates.max(1000) as u64)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&s| pd_sample(&params, 10_000, config.seed.wrapping_add(2_000_003 + s)))
            .collect();
        let mut pd_samples = Vec::new();
        for p in pd {
            pd_samples.push(p?);
        }
        let ps = weight_stats(&pd_samples)?;
        pd_csv.push_str(&format!(
            "pd-sample,{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(alpha),
            ps.n,
            fmt_f64(ps.sum_sq.mean),
            fmt_f64(ps.sum_sq.stderr),
            fmt_f64(ps.sum_cube.mean),
            fmt_f64(ps.sum_cube.stderr),
            fmt_f64(ps.top.mean),
            fmt_f64(ps.top.stderr),
            fmt_f64(ps.empty_fraction)
        ));
    }
    manifest.record_output(&config.out, "pdstats.csv", &pd_csv)?;
    Ok(())
}

fn run_verify_task(config: &ExperimentConfig, manifest: &mut RunManifest) -> Result<(), CliError> {
    let artifacts = verify::run_verify(config.seed)?;

    let mut verify_csv = String::from("criterion,name,observed,threshold,pass\n");
    for o in &artifacts.outcomes {
        verify_csv.push_str(&format!(
            "{},{},\"{}\",\"{}\",{}\n",
            o.id, o.name, o.observed, o.threshold, o.pass
        ));
    }
    manifest.record_output(&config.out, "verify.csv", &verify_csv)?;

    let mut sharp_csv = String::from("n,frac,ratio\n");
    for (n, frac, ratio) in &artifacts.sharp_rows {
        sharp_csv.push_str(&format!("{},{},{}\n", n, fmt_f64(*frac), fmt_f64(*ratio)));
    }
    manifest.record_output(&config.out, "sharp.csv", &sharp_csv)?;

    let mut kernel_csv = String::from("x,mean_kernel,predicted\n");
    for (x, mean, predicted) in &artifacts.kernel_rows {
        kernel_csv.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(*x),
            fmt_f64(*mean),
            fmt_f64(*predicted)
        ));
    }
    manifest.record_output(&config.out, "kernel.csv", &kernel_csv)?;

    let mut process_csv = String::from("bin,mean_count,stderr,predicted,dispersion,ks_stat,ks_p\n");
    for (bin, mean, se, pred, disp, ks, p) in &artifacts.process_rows {
        process_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            bin,
            fmt_f64(*mean),
            fmt_f64(*se),
            fmt_f64(*pred),
            fmt_f64(*disp),
            fmt_f64(*ks),
            fmt_f64(*p)
        ));
    }
    manifest.record_output(&config.out, "process_stats.csv", &process_csv)?;

    let mut pd_csv = String::from("source,alpha,mean_sum_sq,stderr,reference\n");
    for (source, alpha, mean, se, reference) in &artifacts.pd_rows {
        pd_csv.push_str(&format!(
            "{},{},{},{},{}\n",
            source,
            fmt_f64(*alpha),
            fmt_f64(*mean),
            fmt_f64(*se),
            fmt_f64(*reference)
        ));
    }
    manifest.record_output(&config.out, "pd.csv", &pd_csv)?;

    report::emit_verify_report(&artifacts, manifest, &config.out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn moments_task_round_trips_and_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            task: Task::Moments,
            out: dir.path().to_path_buf(),
            ..Default::default()
        };
        cfg.m = 0.3;
        let manifest = run_experiment(&cfg).unwrap();
        assert_eq!(manifest.outputs.len(), 1);
        assert!(manifest.digests_valid(dir.path()).unwrap());
        let text = std::fs::read_to_string(dir.path().join("moments.csv")).unwrap();
        assert!(text.starts_with("psi1,"));
        // uniform(0.5, 1.5): varsigma = 0.7 at m = 0.3
        assert!(text.contains(",0.7,"));
    }

    #[test]
    fn identical_configs_give_identical_digests() {
        let run = |dir: &std::path::Path| {
            let cfg = ExperimentConfig {
                task: Task::Process,
                n: 10,
                replicates: 120,
                out: dir.to_path_buf(),
                ..Default::default()
            };
            run_experiment(&cfg).unwrap()
        };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = run(d1.path());
        let m2 = run(d2.path());
        let digests = |m: &RunManifest| {
            m.outputs
                .iter()
                .map(|o| (o.file.clone(), o.sha256.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(digests(&m1), digests(&m2));
    }
}
