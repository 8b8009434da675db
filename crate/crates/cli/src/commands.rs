//! The four batch commands. Each returns a [`Verdict`] on success; any error
//! maps to exit status 1 in `main`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dobkit::loops::{compensator_phase, make_inner_loop, make_position_system};
use dobkit::robustness::{bode_integral_discrete, freq_grid, freq_sweep, BodeIntegralReport, Spacing};
use dobkit::sim::{disturbance_rejection_metrics, simulate, DEFAULT_SETTLE_THRESHOLD};
use dobkit::stability::{
    bisect_boundary, classify_poles, classify_roots, closed_loop_poles, constraint_check, match_poles,
    root_locus, sweep_values, SweepParam, EXIT_REL_TOL,
};
use dobkit::{DobConfig, LoopSet};
use num_complex::Complex64;

use crate::config::ConfigFile;
use crate::csv::CsvTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Unstable,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Ok => 0,
            Verdict::Unstable => 2,
        }
    }
}

/// Points of the frequency sweep behind the peak values in reports.
const REPORT_SWEEP_POINTS: usize = 512;

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn emit(table: &CsvTable, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        None => table.write_to(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn bode_text(r: &dobkit::Result<BodeIntegralReport>) -> String {
    match r {
        Ok(r) => format!(
            "numeric {:.9e}, analytic {:.9e}, abs error {:.3e}",
            r.numeric_value, r.analytic_value, r.abs_error
        ),
        Err(e) => format!("undefined ({e})"),
    }
}

pub fn analyze(config: &Path, out: Option<&Path>) -> Result<Verdict> {
    let file = ConfigFile::load(config)?;
    let cfg = file.dob()?;
    let gains = file.gains()?;
    let inner = make_inner_loop(&cfg)?;
    let verdict = constraint_check(&cfg);
    let inner_poles = classify_poles(&inner.t)?;
    let outer = match gains {
        Some(g) => Some(classify_roots(&closed_loop_poles(&cfg, &g)?)),
        None => None,
    };
    let outer_mag = outer.map(|c| c.max_mag);
    let outer_stable = outer.is_none_or(|c| c.all_in_unit);
    let stable = verdict.stable && outer_stable;
    let bode = bode_integral_discrete(&inner);
    let sweep = freq_sweep(&inner, REPORT_SWEEP_POINTS, Spacing::Log);

    let mut o = io::stdout().lock();
    writeln!(o, "kind              {}", cfg.kind)?;
    writeln!(o, "alpha             {}", cfg.alpha())?;
    writeln!(o, "alpha*g_DOB       {} rad/s", cfg.alpha_g())?;
    if let Some(beta) = cfg.beta() {
        writeln!(o, "beta              {beta:e} s^2")?;
    }
    writeln!(o, "compensator       {}", compensator_phase(&inner.c)?.as_str())?;
    writeln!(
        o,
        "inner verdict     {}, {} (binding {}, margin {} rad/s)",
        if verdict.stable { "stable" } else { "unstable" },
        if verdict.non_oscillatory { "non-oscillatory" } else { "oscillatory" },
        verdict.binding_constraint.as_str(),
        verdict.margin
    )?;
    writeln!(o, "inner max |pole|  {}", inner_poles.max_mag)?;
    if let Some(m) = outer_mag {
        writeln!(o, "outer max |pole|  {m} ({})", if outer_stable { "stable" } else { "unstable" })?;
    }
    writeln!(o, "bode integral     {}", bode_text(&bode))?;
    match &sweep {
        Ok(s) => {
            writeln!(o, "peak_S            {} ({:.3} dB) at {} rad/s", s.peak_s.value, db(s.peak_s.value), s.peak_s.freq)?;
            writeln!(o, "peak_T            {} ({:.3} dB) at {} rad/s", s.peak_t.value, db(s.peak_t.value), s.peak_t.freq)?;
        }
        Err(e) => writeln!(o, "peaks             undefined ({e})")?,
    }
    writeln!(o, "result            {}", if stable { "stable" } else { "unstable" })?;
    drop(o);

    if let Some(path) = out {
        let mut t = CsvTable::new([
            "alpha", "alpha_g", "stable", "non_oscillatory", "margin", "inner_max_pole_mag",
            "outer_max_pole_mag", "bode_numeric", "bode_analytic", "peak_S", "peak_S_omega", "peak_T",
            "peak_T_omega",
        ]);
        let (bn, ba) = bode.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.numeric_value, r.analytic_value));
        let (ps, pt) = sweep.as_ref().map_or(([f64::NAN; 2], [f64::NAN; 2]), |s| {
            ([s.peak_s.value, s.peak_s.freq], [s.peak_t.value, s.peak_t.freq])
        });
        t.push(vec![
            cfg.alpha(),
            cfg.alpha_g(),
            f64::from(u8::from(stable)),
            f64::from(u8::from(verdict.non_oscillatory)),
            verdict.margin,
            inner_poles.max_mag,
            outer_mag.unwrap_or(f64::NAN),
            bn,
            ba,
            ps[0],
            ps[1],
            pt[0],
            pt[1],
        ]);
        emit(&t, Some(path))?;
    }
    Ok(if stable { Verdict::Ok } else { Verdict::Unstable })
}

#[derive(Clone, Debug)]
pub struct SweepArgs {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log: bool,
    pub out: Option<PathBuf>,
}

/// Inner-loop poles along a sweep, branch-matched, for configs without an
/// outer loop.
fn inner_locus(base: &DobConfig, param: SweepParam, values: &[f64]) -> Result<(Vec<Vec<Complex64>>, Option<f64>)> {
    let poles_at = |v: f64| -> dobkit::Result<Vec<Complex64>> {
        Ok(make_inner_loop(&param.apply(base, v)?)?.t.poles()?.roots)
    };
    let mut poles: Vec<Vec<Complex64>> = Vec::with_capacity(values.len());
    for &v in values {
        let set = poles_at(v)?;
        poles.push(match poles.last() {
            Some(prev) => match_poles(prev, &set),
            None => set,
        });
    }
    let inside: Vec<bool> = poles.iter().map(|p| classify_roots(p).all_in_unit).collect();
    let exit = match inside.windows(2).position(|w| w[0] && !w[1]) {
        Some(i) => Some(bisect_boundary(values[i], values[i + 1], EXIT_REL_TOL, |v| {
            Ok(classify_roots(&poles_at(v)?).all_in_unit)
        })?),
        None => None,
    };
    Ok((poles, exit))
}

pub fn sweep(config: &Path, args: &SweepArgs) -> Result<Verdict> {
    if !(args.from.is_finite() && args.to.is_finite() && args.from < args.to) {
        bail!("invalid range: need --from < --to, got {} and {}", args.from, args.to);
    }
    if args.points < 2 {
        bail!("invalid range: need --points >= 2, got {}", args.points);
    }
    if args.log && args.from <= 0.0 {
        bail!("invalid range: a logarithmic sweep needs --from > 0");
    }
    let file = ConfigFile::load(config)?;
    let base = file.dob()?;
    // validate both ends before doing any work
    args.param.apply(&base, args.from)?;
    args.param.apply(&base, args.to)?;
    let values = sweep_values(args.from, args.to, args.points, args.log);

    let (poles, exit) = match file.gains()? {
        Some(g) => {
            let locus = root_locus(&base, &g, args.param, &values)?;
            (locus.poles, locus.exit_value)
        }
        None => inner_locus(&base, args.param, &values)?,
    };
    let n = poles[0].len();
    let mut header: Vec<String> = vec!["param_value".into()];
    header.extend((1..=n).map(|i| format!("pole_re_{i}")));
    header.extend((1..=n).map(|i| format!("pole_im_{i}")));
    header.extend(["max_pole_mag", "peak_S", "bode_numeric", "bode_analytic"].map(String::from));
    let mut table = CsvTable::new(header);

    for (&v, ps) in values.iter().zip(&poles) {
        let inner = make_inner_loop(&args.param.apply(&base, v)?)?;
        let peak = freq_sweep(&inner, REPORT_SWEEP_POINTS, Spacing::Log).map_or(f64::NAN, |s| s.peak_s.value);
        let (bn, ba) = bode_integral_discrete(&inner).map_or((f64::NAN, f64::NAN), |r| (r.numeric_value, r.analytic_value));
        let mut row = vec![v];
        row.extend(ps.iter().map(|p| p.re));
        row.extend(ps.iter().map(|p| p.im));
        row.extend([classify_roots(ps).max_mag, peak, bn, ba]);
        table.push(row);
    }
    let name = match args.param {
        SweepParam::Alpha => "alpha",
        SweepParam::GDob => "g_dob",
    };
    match exit {
        Some(x) => eprintln!("exit_value {name} = {x:.12e}"),
        None => eprintln!("exit_value {name} = none"),
    }
    emit(&table, args.out.as_deref())?;
    Ok(Verdict::Ok)
}

pub fn simulate_cmd(config: &Path, out: Option<&Path>) -> Result<Verdict> {
    let file = ConfigFile::load(config)?;
    let sc = file.scenario()?;
    let trace = simulate(&sc)?;
    let mut table = CsvTable::new(["t", "q_ref", "q", "qdot", "qddot", "I", "tau_d", "tau_dis_hat", "diverged"]);
    let last = trace.len() - 1;
    for (k, s) in trace.samples.iter().enumerate() {
        let flag = trace.diverged && k == last;
        table.push(vec![s.t, s.q_ref, s.q, s.qdot, s.qddot, s.current, s.tau_d, s.tau_dis_hat, f64::from(u8::from(flag))]);
    }

    // metrics over the first disturbance window, or the whole run
    let (t0, mut t1) = sc.disturbance.first().map_or((0.0, sc.duration), |w| (w.start, w.end));
    let t_last = trace.samples[last].t;
    t1 = t1.min(t_last);
    let summary = if t0 < t1 {
        match disturbance_rejection_metrics(&trace, (t0, t1), DEFAULT_SETTLE_THRESHOLD) {
            Ok(m) => vec![
                format!("metrics window [{t0}, {t1}] s"),
                format!("max_error {:e} m", m.max_error),
                match m.settle_time {
                    Some(t) => format!("settle_time {t} s (threshold {DEFAULT_SETTLE_THRESHOLD:e})"),
                    None => "settle_time none".to_string(),
                },
                format!("rms_estimation_error {:e} N m", m.rms_estimation_error),
                format!("diverged {}", m.diverged),
            ],
            Err(e) => vec![format!("metrics unavailable: {e}")],
        }
    } else {
        vec![format!("metrics unavailable: trace ended at t = {t_last} s")]
    };
    if trace.diverged {
        table.footer.push(format!("diverged at t = {t_last} s"));
    }
    emit(&table, out)?;
    let mut o = io::stdout().lock();
    for line in summary {
        writeln!(o, "# {line}")?;
    }
    Ok(if trace.diverged { Verdict::Unstable } else { Verdict::Ok })
}

fn mag_at(tf: &dobkit::RationalTf, w: f64) -> Result<f64> {
    Ok(tf.freq_response(w)?.norm())
}

pub fn bode(config: &Path, points: usize, out: Option<&Path>) -> Result<Verdict> {
    if points < 16 {
        bail!("--points must be >= 16, got {points}");
    }
    let file = ConfigFile::load(config)?;
    let cfg = file.dob()?;
    let gains = file.require_gains()?;
    let (inner, outer): (LoopSet, LoopSet) = make_position_system(&cfg, &gains)?;
    let mut table = CsvTable::new([
        "omega_rad_s",
        "theta_rad",
        "inner_mag_S_dB",
        "inner_mag_T_dB",
        "outer_mag_S_dB",
        "outer_mag_T_dB",
        "combined_mag_S_dB",
        "inner_mag_C_dB",
    ]);
    for w in freq_grid(cfg.ts, points, Spacing::Log) {
        let si = mag_at(&inner.s, w)?;
        let so = mag_at(&outer.s, w)?;
        table.push(vec![
            w,
            (w * cfg.ts).min(PI),
            db(si),
            db(mag_at(&inner.t, w)?),
            db(so),
            db(mag_at(&outer.t, w)?),
            db(si * so),
            db(mag_at(&inner.c, w)?),
        ]);
    }
    table.footer.push(format!("bode_integral inner: {}", bode_text(&bode_integral_discrete(&inner))));
    table.footer.push(format!("bode_integral outer: {}", bode_text(&bode_integral_discrete(&outer))));
    emit(&table, out)?;
    Ok(Verdict::Ok)
}

