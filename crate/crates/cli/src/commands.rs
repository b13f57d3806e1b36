use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::ValueEnum;
use farey_thermo::alpha::{Alpha, AlphaSpec};
use farey_thermo::analysis::{
    classify, construction_diagnostic, convergent_limit_estimate, d_estimate, free_energy_series, Budget,
    ClassificationReport, Scale,
};
use farey_thermo::contfrac::{convergents, Exponent, DEFAULT_DIGIT_CAP};
use farey_thermo::farey::farey_set;
use farey_thermo::numerics::{set_precision_cap, RealScalar};
use farey_thermo::partition::{
    diophantine_spec, fiala_kleban_spec, knauf_spec, term_rows, z_knauf_set, Engine, PartitionResult,
    ENUMERATION_CAP,
};
use farey_thermo::report::{
    diagnostic_rows, estimate_ln_rows, estimate_rows, increment_rows, series_rows, write_csv, write_json, SeriesRow,
};
use farey_thermo::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::config::Config;
use crate::{AlphaArgs, Cli, Cmd, Estimator, Form, Format, Kind, PRECISION_ENV};

struct Ctx {
    cfg: Config,
    format: Option<Format>,
    out: Box<dyn Write>,
    engine: Engine,
    digit_cap: u64,
}

impl Ctx {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn beta(&self, flag: &Option<String>) -> Result<Option<RealScalar>> {
        match flag.as_deref().or(self.cfg.get("beta")) {
            None => Ok(None),
            Some(s) => RealScalar::parse_decimal(s).map(Some),
        }
    }

    fn need_beta(&self, flag: &Option<String>) -> Result<RealScalar> {
        self.beta(flag)?.ok_or_else(|| Error::InvalidInput("--beta is required".into()))
    }

    fn alpha(&self, a: &AlphaArgs) -> Result<Option<Alpha>> {
        let pairs = [
            ("rational", &a.rational),
            ("surd", &a.surd),
            ("named", &a.named),
            ("construct", &a.construct),
            ("literal", &a.literal),
        ];
        match pairs.iter().find_map(|(k, v)| v.as_ref().map(|v| (*k, v))) {
            None => Ok(None),
            Some((k, v)) => AlphaSpec::parse(k, v)?.build_with(self.digit_cap).map(Some),
        }
    }

    fn need_alpha(&self, a: &AlphaArgs) -> Result<Alpha> {
        self.alpha(a)?.ok_or_else(|| {
            Error::InvalidInput("choose alpha with --rational, --surd, --named, --construct or --literal".into())
        })
    }
}

fn pick<T>(flag: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>>
where
    T: std::str::FromStr,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.parsed(key),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let c = cli.common;
    let cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let env_bits = match std::env::var(PRECISION_ENV) {
        Ok(v) => Some(v.trim().parse::<u64>().map_err(|_| Error::InvalidInput(format!("{PRECISION_ENV}={v:?}")))?),
        Err(_) => None,
    };
    if let Some(bits) = c.precision_bits.or(env_bits).map(Ok).or_else(|| cfg.parsed("precision_bits").transpose()).transpose()? {
        set_precision_cap(bits);
    }
    let enum_cap = pick(c.enum_cap, &cfg, "enum_cap")?.unwrap_or(ENUMERATION_CAP);
    if enum_cap > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!("enum_cap {enum_cap} is above the hard limit {ENUMERATION_CAP}")));
    }
    let threads = pick(c.threads, &cfg, "threads")?;
    let digit_cap = pick(c.digit_cap, &cfg, "digit_cap")?.unwrap_or(DEFAULT_DIGIT_CAP);
    let format = match c.format {
        Some(f) => Some(f),
        None => cfg
            .get("format")
            .map(|s| Format::from_str(s, true).map_err(|_| Error::InvalidInput(format!("unknown format {s:?}"))))
            .transpose()?,
    };
    let output = c.output.or_else(|| cfg.get("output").map(PathBuf::from));
    let out: Box<dyn Write> = match output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut ctx = Ctx { cfg, format, out, engine: Engine::new(enum_cap, threads), digit_cap };
    match cli.cmd {
        Cmd::Farey { n } => cmd_farey(&mut ctx, n)?,
        Cmd::Cf { alpha, depth } => cmd_cf(&mut ctx, &alpha, depth)?,
        Cmd::Partition { kind, n, beta, x, form, alpha, infinity, terms } => {
            cmd_partition(&mut ctx, PartitionArgs { kind, n, beta, x, form, alpha, infinity, terms })?
        }
        Cmd::FreeEnergy { alpha, beta, scale, n_range, depth, estimator, log } => {
            cmd_free_energy(&mut ctx, &alpha, &beta, scale, n_range, depth, estimator, log)?
        }
        Cmd::Classify { alpha, beta, depth, k_grid, window, tol, enum_n } => {
            cmd_classify(&mut ctx, &alpha, &beta, depth, k_grid, window, tol, enum_n)?
        }
    }
    ctx.out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FareyRow {
    index: usize,
    p: String,
    q: String,
}

fn cmd_farey(ctx: &mut Ctx, n: usize) -> Result<()> {
    let set = farey_set(n)?;
    match ctx.format(Format::Text) {
        Format::Text => {
            let s: Vec<String> = set.iter().map(|f| f.to_string()).collect();
            writeln!(ctx.out, "{}", s.join(", "))?;
        }
        Format::Csv => {
            let rows: Vec<FareyRow> = set
                .iter()
                .enumerate()
                .map(|(i, f)| FareyRow { index: i, p: f.num.to_string(), q: f.den.to_string() })
                .collect();
            write_csv(&rows, &mut ctx.out)?;
        }
        Format::Json => write_json(&json!({ "n": n, "fractions": set }), &mut ctx.out)?,
    }
    Ok(())
}

fn cmd_cf(ctx: &mut Ctx, a: &AlphaArgs, depth: Option<usize>) -> Result<()> {
    let alpha = ctx.need_alpha(a)?;
    let cf = &alpha.cf;
    let depth = match depth.or(ctx.cfg.parsed("depth")?) {
        Some(d) => d,
        None if cf.is_finite() => cf.ensure(usize::MAX),
        None => 10,
    };
    if depth == 0 {
        return Err(Error::InvalidInput("--depth must be at least 1".into()));
    }
    let have = cf.ensure(depth).min(depth);
    let stop = (have < depth && !cf.is_finite()).then(|| cf.stop_reason()).flatten();
    let table = if have > 0 { convergents(cf, have - 1)? } else { Default::default() };
    match ctx.format(Format::Text) {
        Format::Text => {
            writeln!(ctx.out, "{}", cf.render(have))?;
            writeln!(ctx.out, "m\ta_m\tp_m\tq_m\tN_m")?;
            for r in &table.rows {
                writeln!(ctx.out, "{}\t{}\t{}\t{}\t{}", r.m, r.a, r.p, r.q, r.n)?;
            }
            if let Some(e) = &stop {
                writeln!(ctx.out, "# stopped after {have} quotients: {e}")?;
            }
        }
        Format::Csv => write_csv(&table.rows, &mut ctx.out)?,
        Format::Json => write_json(
            &json!({
                "alpha": alpha.label,
                "expansion": cf.render(have),
                "convergents": table.rows,
                "stop": stop.map(|e| e.to_string()),
            }),
            &mut ctx.out,
        )?,
    }
    Ok(())
}

struct PartitionArgs {
    kind: Kind,
    n: usize,
    beta: Option<String>,
    x: Option<String>,
    form: Form,
    alpha: AlphaArgs,
    infinity: bool,
    terms: bool,
}

#[derive(Serialize)]
struct PartitionRow {
    kind: String,
    form: String,
    #[serde(rename = "N")]
    n: usize,
    beta_lo: f64,
    beta_hi: f64,
    lower: f64,
    upper: f64,
    midpoint: f64,
    terms: u64,
}

fn cmd_partition(ctx: &mut Ctx, p: PartitionArgs) -> Result<()> {
    let beta = ctx.need_beta(&p.beta)?;
    if p.form == Form::Set && p.kind != Kind::Knauf {
        return Err(Error::InvalidInput("--form set applies to --kind knauf only".into()));
    }
    let spec = match p.kind {
        Kind::Knauf => knauf_spec(p.n, &beta),
        Kind::Fk => {
            let x = p.x.as_deref().ok_or_else(|| Error::InvalidInput("--kind fk needs --x".into()))?;
            fiala_kleban_spec(p.n, &RealScalar::parse_decimal(x)?, &beta)
        }
        Kind::Dioph => diophantine_spec(&ctx.need_alpha(&p.alpha)?.value, p.n, &beta, p.infinity),
    };
    if p.terms {
        if p.form == Form::Set {
            return Err(Error::InvalidInput("--terms lists matrix-form terms only".into()));
        }
        let rows = term_rows(&spec)?;
        return match ctx.format(Format::Csv) {
            Format::Json => write_json(&rows, &mut ctx.out),
            _ => write_csv(&rows, &mut ctx.out),
        };
    }
    let res: PartitionResult = match p.form {
        Form::Set => {
            if p.n > ctx.engine.cap {
                return Err(Error::CapExceeded(format!("N = {} exceeds the enumeration cap {}", p.n, ctx.engine.cap)));
            }
            z_knauf_set(p.n, &beta)?
        }
        Form::Matrix => ctx.engine.z_general(&spec)?,
    };
    let row = PartitionRow {
        kind: format!("{:?}", p.kind).to_lowercase(),
        form: format!("{:?}", p.form).to_lowercase(),
        n: p.n,
        beta_lo: res.beta.lo,
        beta_hi: res.beta.hi,
        lower: res.value.lo,
        upper: res.value.hi,
        midpoint: res.value.mid(),
        terms: res.term_count,
    };
    match ctx.format(Format::Text) {
        Format::Text => {
            writeln!(ctx.out, "Z = [{}, {}] (midpoint {})", row.lower, row.upper, row.midpoint)?;
            writeln!(ctx.out, "kind {} form {} N {} beta {} terms {}", row.kind, row.form, row.n, res.beta, row.terms)?;
        }
        Format::Csv => write_csv(&[row], &mut ctx.out)?,
        Format::Json => write_json(&row, &mut ctx.out)?,
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::InvalidInput(format!("bad N range {s:?}; use a..b"));
    let (a, b) = s.split_once("..").or_else(|| s.split_once('-')).ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_free_energy(
    ctx: &mut Ctx,
    a: &AlphaArgs,
    beta: &Option<String>,
    scale: Option<String>,
    n_range: Option<String>,
    depth: Option<usize>,
    estimator: Option<Estimator>,
    log: bool,
) -> Result<()> {
    let alpha = ctx.need_alpha(a)?;
    let scale = Scale::parse(scale.as_deref().or(ctx.cfg.get("scale")).unwrap_or("N"))?;
    let n_range = n_range.or_else(|| ctx.cfg.get("n_range").map(str::to_string));
    let fmt = ctx.format(Format::Csv);
    if let Some(r) = n_range {
        let beta = ctx.need_beta(beta)?;
        let ns = parse_range(&r)?;
        let s = free_energy_series(&alpha.value, &alpha.cf, &alpha.label, &beta, &ns, &scale, &ctx.engine)?;
        return match fmt {
            Format::Json => write_json(&s, &mut ctx.out),
            _ => write_csv(&series_rows(&s), &mut ctx.out),
        };
    }
    let depth = pick(depth, &ctx.cfg, "depth")?.unwrap_or(40);
    let estimator = match estimator {
        Some(e) => e,
        None => match ctx.cfg.get("estimator") {
            Some(s) => Estimator::from_str(s, true).map_err(|_| Error::InvalidInput(format!("unknown estimator {s:?}")))?,
            None => Estimator::Convergent,
        },
    };
    let (rows, json): (Vec<SeriesRow>, serde_json::Value) = match estimator {
        Estimator::Convergent | Estimator::Increment | Estimator::D => {
            let est = if estimator == Estimator::D {
                d_estimate(&alpha.cf, &scale, depth)?
            } else {
                convergent_limit_estimate(&alpha.cf, &scale, depth)?
            };
            let rows = match (estimator, log) {
                (Estimator::Increment, _) => increment_rows(&est),
                (_, true) => estimate_ln_rows(&est),
                _ => estimate_rows(&est),
            };
            (rows, serde_json::to_value(&est)?)
        }
        Estimator::Diagnostic => {
            let beta = ctx.need_beta(beta)?;
            let exponent = match alpha.label.as_str() {
                "thm42" => Exponent::Index,
                "thm43" => Exponent::Checkpoint,
                _ => return Err(Error::InvalidInput("the diagnostic needs --construct thm42 or thm43".into())),
            };
            let d = construction_diagnostic(&alpha.cf, exponent, beta.to_interval(), depth);
            (diagnostic_rows(&d, &format!("diagnostic_{}", alpha.label)), serde_json::to_value(&d)?)
        }
    };
    match fmt {
        Format::Json => write_json(&json, &mut ctx.out),
        _ => write_csv(&rows, &mut ctx.out),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_classify(
    ctx: &mut Ctx,
    a: &AlphaArgs,
    beta: &Option<String>,
    depth: Option<usize>,
    k_grid: Option<String>,
    window: Option<usize>,
    tol: Option<f64>,
    enum_n: Option<usize>,
) -> Result<()> {
    let alpha = ctx.need_alpha(a)?;
    let beta = ctx.need_beta(beta)?;
    let mut budget = Budget { engine: ctx.engine.clone(), ..Budget::default() };
    if let Some(d) = pick(depth, &ctx.cfg, "depth")? {
        budget.depth = d;
    }
    if let Some(w) = pick(window, &ctx.cfg, "window")? {
        budget.window = w;
    }
    if let Some(t) = pick(tol, &ctx.cfg, "tol")? {
        budget.tol = t;
    }
    if let Some(t) = ctx.cfg.parsed("slope_tol")? {
        budget.slope_tol = t;
    }
    if let Some(n) = pick(enum_n, &ctx.cfg, "enum_n")? {
        budget.enum_n = n.min(ctx.engine.cap);
    }
    if let Some(g) = k_grid.as_deref().or(ctx.cfg.get("k_grid")) {
        budget.k_grid = g
            .split(',')
            .map(|k| k.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad k in {g:?}"))))
            .collect::<Result<_>>()?;
    }
    let report = classify(&alpha.value, &alpha.cf, &alpha.label, &beta, &budget)?;
    match ctx.format(Format::Json) {
        Format::Json => write_json(&report, &mut ctx.out),
        Format::Csv => {
            let rows: Vec<SeriesRow> = report
                .fits
                .iter()
                .filter_map(|f| Some(SeriesRow::new(f.last_m?, f.window?, f.scale.clone())))
                .collect();
            write_csv(&rows, &mut ctx.out)
        }
        Format::Text => summary(&mut ctx.out, &report),
    }
}

fn verdict(v: &farey_thermo::analysis::Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

fn summary(out: &mut dyn Write, r: &ClassificationReport) -> Result<()> {
    writeln!(out, "alpha: {}", r.alpha)?;
    writeln!(out, "beta: {}", r.beta)?;
    write!(out, "one_free_energy: {}", verdict(&r.one_free_energy.verdict))?;
    if let Some(l) = r.one_free_energy.limit {
        write!(out, " (limit in [{:.6e}, {:.6e}])", l.lo, l.hi)?;
    }
    writeln!(out)?;
    writeln!(out, "  evidence: {}", r.one_free_energy.evidence)?;
    for k in &r.k_free_energy_zero {
        writeln!(out, "k={} free energy zero: {}", k.k, verdict(&k.entry.verdict))?;
    }
    writeln!(out, "fitted scale: {}", r.fitted_scale.as_deref().unwrap_or("none"))?;
    let ok = r.sandwich.iter().all(|s| s.holds);
    writeln!(out, "sandwich cross-check: {} ({} lengths)", if ok { "ok" } else { "violated" }, r.sandwich.len())?;
    for n in &r.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}
