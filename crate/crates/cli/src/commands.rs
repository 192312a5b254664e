use serde_json::json;
use skewcmv::cmv::{build_restriction, BoundaryCondition};
use skewcmv::coeffs::VerblunskySource;
use skewcmv::ergodic::{
    box_visits, diophantine_constant, loglog_slope, selberg_majorant, weyl_linear, weyl_quadratic,
    weyl_quadratic_sup, BoxSpec,
};
use skewcmv::green::{decay_scan, DecayOptions};
use skewcmv::num::{dist_z, e};
use skewcmv::stats::{
    gap_vector, laplace_functional, rotation_angles, spectrum_angles, wegner_average, AngleSet,
    LaplaceSpec,
};
use skewcmv::transfer::{lyapunov_estimate, lyapunov_pointwise, skew_shift_lyapunov, torus_grid, trace_to_csv};

use crate::config::{parse_omega, resolve_source, skew_params, BoundaryArgs, Command};
use crate::{CliError, ExperimentConfig, Output};

pub(crate) fn dispatch(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    match &cfg.command {
        Command::Spectrum(a) => {
            let src = resolve_source(&a.source)?;
            let mut rows = Vec::new();
            for &n in &a.n {
                let (angles, residual) = spectrum(&src, n, &a.boundary)?;
                let name = format!("spectrum_n{n}.csv");
                out.write(&name, &angles.to_csv())?;
                out.plot(&name, 1, 2, "points")?;
                rows.push(json!({
                    "n": n,
                    "count": angles.len(),
                    "root_residual": residual,
                    "max_gap": angles.max_gap(),
                }));
            }
            out.summary("spectrum", cfg, json!(rows))
        }
        Command::Gaps(a) => {
            let src = resolve_source(&a.source)?;
            if !(a.bin > 0.0) {
                return Err(CliError::Usage("--bin must be positive".into()));
            }
            let mut rows = Vec::new();
            for &n in &a.n {
                let (angles, _) = spectrum(&src, n, &a.boundary)?;
                let g = gap_vector(&angles)?;
                out.write(&format!("gaps_n{n}.csv"), &g.to_csv())?;
                let mut hist = String::from("bin_start,count\n");
                for (b, c) in g.histogram(a.bin) {
                    hist.push_str(&format!("{b:?},{c}\n"));
                }
                let name = format!("gap_hist_n{n}.csv");
                out.write(&name, &hist)?;
                out.plot(&name, 1, 2, "boxes")?;
                rows.push(json!({
                    "n": n,
                    "ks_exp1": g.ks_exp1(),
                    "top3_bin_mass": g.top_bins_mass(a.bin, 3),
                    "max_normalized_gap": g.normalized.iter().cloned().fold(0.0, f64::max),
                }));
            }
            out.summary("gaps", cfg, json!(rows))
        }
        Command::Laplace(a) => {
            let src = resolve_source(&a.source)?;
            let omega = parse_omega(&a.source.omega)?;
            let spec = LaplaceSpec::hat().with_resolution(a.resolution);
            let mut csv = String::from("n,spectrum,rotation,diff\n");
            let mut rows = Vec::new();
            for &n in &a.n {
                let (angles, _) = spectrum(&src, n, &a.boundary)?;
                let ls = laplace_functional(&angles, &spec);
                let lr = laplace_functional(&rotation_angles(2.0 * omega, n)?, &spec);
                csv.push_str(&format!("{n},{ls:?},{lr:?},{:?}\n", (ls - lr).abs()));
                rows.push(json!({ "n": n, "spectrum": ls, "rotation": lr, "diff": (ls - lr).abs() }));
            }
            out.write("laplace.csv", &csv)?;
            out.plot("laplace.csv", 1, 4, "linespoints")?;
            out.summary("laplace", cfg, json!({ "test_function": spec.name(), "rows": rows }))
        }
        Command::Lyapunov(a) => {
            let (params, start) = skew_params(&a.source)?;
            let grid = torus_grid(params.k, a.grid)?;
            let exact = skew_shift_lyapunov(params.lambda);
            let mut csv = String::from("n,z_turns,estimate,exact,rel_err\n");
            let mut rows = Vec::new();
            for &n in &a.n {
                for &zt in &a.z {
                    let est = lyapunov_estimate(&params, &grid, e(zt), n)?;
                    let rel = (est - exact).abs() / exact;
                    csv.push_str(&format!("{n},{zt:?},{est:?},{exact:?},{rel:?}\n"));
                    rows.push(json!({ "n": n, "z_turns": zt, "estimate": est, "exact": exact, "rel_err": rel }));
                }
            }
            out.write("lyapunov.csv", &csv)?;
            if a.trace {
                let src = VerblunskySource::skew_shift(params, start)?;
                let n = *a.n.first().ok_or_else(|| CliError::Usage("--n is empty".into()))?;
                let z = *a.z.first().ok_or_else(|| CliError::Usage("--z is empty".into()))?;
                out.write("lyapunov_trace.csv", &trace_to_csv(&lyapunov_pointwise(&src, e(z), n)?))?;
                out.plot("lyapunov_trace.csv", 1, 2, "lines")?;
            }
            out.summary("lyapunov", cfg, json!(rows))
        }
        Command::Wegner(a) => {
            let (params, start) = skew_params(&a.source)?;
            let arc = match a.arc.as_slice() {
                [t1, t2] => (*t1, *t2),
                _ => return Err(CliError::Usage("--arc expects `θ1,θ2`".into())),
            };
            let v = wegner_average(&params, &start, a.n, arc, a.grid, e(a.boundary.beta), e(a.boundary.gamma))?;
            out.summary("wegner", cfg, json!({ "average": v, "arc_length": arc.1 - arc.0 }))
        }
        Command::GreenScan(a) => {
            let src = resolve_source(&a.source)?;
            let opts = DecayOptions {
                beta0: e(a.boundary.beta),
                gamma0: e(a.boundary.gamma),
                phase_locked: true,
                rate: a.rate,
            };
            let rep = decay_scan(&src, e(a.z), a.n, a.m, a.c, &opts)?;
            let mut csv = String::from("k,beta_re,beta_im,gamma_re,gamma_im,max_abs_g,pass,exp_pass\n");
            for r in &rep.records {
                let exp = r.exp_pass.map(|b| b.to_string()).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{:?},{:?},{:?},{:?},{:?},{},{}\n",
                    r.k, r.beta.re, r.beta.im, r.gamma.re, r.gamma.im, r.max_abs_g, r.pass, exp
                ));
            }
            out.write("green_scan.csv", &csv)?;
            out.plot("green_scan.csv", 1, 6, "points")?;
            let passing = rep.passing().count();
            out.summary(
                "green_scan",
                cfg,
                json!({
                    "k_minus": rep.k_minus,
                    "k_plus": rep.k_plus,
                    "passing": passing,
                    "total": rep.records.len(),
                }),
            )
        }
        Command::Recurrence(a) => {
            let (params, start) = skew_params(&a.source)?;
            let b = BoxSpec::new(a.eps, a.delta)?;
            let maj = selberg_majorant(&b);
            let mut csv = String::from("l,count,best_offset,bound\n");
            let mut rows = Vec::new();
            for &l in &a.n {
                let v = box_visits(&params, &start, &b, l, a.stride)?;
                let bound = 10.0 * a.eps * a.delta * l as f64 / a.stride as f64;
                csv.push_str(&format!("{l},{},{},{bound:?}\n", v.count, v.best_offset));
                rows.push(json!({ "l": l, "count": v.count, "best_offset": v.best_offset, "bound": bound }));
            }
            out.write("recurrence.csv", &csv)?;
            let omega = parse_omega(&a.source.omega)?;
            let (dc, q) = diophantine_constant(omega, a.tau, a.qmax)?;
            out.summary(
                "recurrence",
                cfg,
                json!({
                    "rows": rows,
                    "majorant_mean": maj.mean(),
                    "majorant_degrees": [maj.x.degree, maj.y.degree],
                    "diophantine_constant": dc,
                    "diophantine_q": q,
                }),
            )
        }
        Command::Weyl(a) => {
            let omega = parse_omega(&a.omega)?;
            let mut csv = String::from("l,abs_linear,abs_quadratic,sup_quadratic,linear_bound\n");
            let mut ls = Vec::new();
            let mut sups = Vec::new();
            let bound = if dist_z(omega) > 0.0 { 1.0 / (2.0 * dist_z(omega)) } else { f64::INFINITY };
            for &l in &a.n {
                let lin = weyl_linear(omega, l)?.norm();
                let quad = weyl_quadratic(a.t, omega, l)?.norm();
                let sup = weyl_quadratic_sup(omega, l, a.oversample)?;
                csv.push_str(&format!("{l},{lin:?},{quad:?},{sup:?},{bound:?}\n"));
                ls.push(l as f64);
                sups.push(sup);
            }
            out.write("weyl.csv", &csv)?;
            out.plot("weyl.csv", 1, 4, "linespoints")?;
            let slope = loglog_slope(&ls, &sups).ok();
            out.summary("weyl", cfg, json!({ "sup_loglog_slope": slope }))
        }
    }
}

fn spectrum(src: &VerblunskySource, n: usize, b: &BoundaryArgs) -> Result<(AngleSet, f64), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let left = BoundaryCondition::fixed(e(b.beta))?;
    let right = BoundaryCondition::fixed(e(b.gamma))?;
    let r = build_restriction(src, 0, n as i64 - 1, left, right)?;
    Ok(spectrum_angles(&r)?)
}
