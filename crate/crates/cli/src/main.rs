//! `adapt`: batch front end for adaptive expansion arithmetic.
//!
//! Every command prints `key=value` records, one per line. Exit status is 0 on
//! success, 1 for usage and parse errors, 2 for numeric errors and 3 when a
//! theorem check fails.

use std::cmp::Ordering;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

use adapt_core::eval::{
    eval_adaptive, parse_expr, parse_rational, sign_det_with_stats, total_firings, Bindings, EvalOptions,
};
use adapt_core::oracle::{check_all, check_theorem, CheckOptions, DEFAULT_SEED};
use adapt_core::text::{
    format_decimal, format_expansion_line, format_format, parse_expansion_line, parse_format, ExpansionLine, FloatStyle,
};
use adapt_core::{BigRational, Binary64, Error, FloatArith, GenericFormat, SmallBinary};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;

#[derive(Parser)]
#[command(name = "adapt", version, about = "Adaptive expansion arithmetic: evaluation, predicates, theorem checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FormatArg {
    /// `binary64`, `binary32`, `beta=<b> p=<p> emin=<e>` or `beta=<b> p=<p> r=<r>`.
    #[arg(long, default_value = "binary64")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression to a certified absolute accuracy.
    Eval {
        expr: String,
        /// Absolute accuracy such as `1e-9` or `1/1000`; `0` asks for the exact value.
        #[arg(long, default_value = "1e-15")]
        target: String,
        /// Stop after this many components.
        #[arg(long)]
        digits: Option<usize>,
        #[command(flatten)]
        format: FormatArg,
        /// Print every stage firing.
        #[arg(long)]
        trace: bool,
        /// `name=value`, repeatable.
        #[arg(long = "bind", value_name = "NAME=VALUE")]
        bind: Vec<String>,
        /// Print one summary line instead of records.
        #[arg(long)]
        summary: bool,
    },
    /// Sign of a 2×2 or 3×3 determinant; rows separated by `;`.
    Det {
        matrix: String,
        #[command(flatten)]
        format: FormatArg,
        #[arg(long)]
        trace: bool,
    },
    /// Run a theorem sweep: a tag such as `Thm12`, `ExtDekker-raw3op`, or `all`.
    Check {
        tag: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Replace the default sweep format.
        #[arg(long)]
        format: Option<String>,
        /// Radix of the raw three-operation counterexample (10 or 4).
        #[arg(long)]
        beta: Option<u32>,
        /// Randomized division steps for Thm14.
        #[arg(long, default_value_t = 10_000)]
        digits: usize,
    },
    /// Re-encode expansion lines from one format to another, canonically.
    Convert {
        /// Input file; standard input when absent or `-`.
        input: Option<String>,
        #[arg(long, default_value = "binary64")]
        from: String,
        /// Output format; the input format when absent.
        #[arg(long)]
        to: Option<String>,
        #[arg(long, value_enum, default_value_t = Style::Hex)]
        style: Style,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Style {
    Pair,
    Hex,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Out<'a> = &'a mut dyn Write;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            match f {
                Failure::Usage(m) => {
                    eprintln!("error: {m}");
                    ExitCode::from(1)
                }
                Failure::Numeric(m) => {
                    eprintln!("error: {m}");
                    ExitCode::from(2)
                }
                Failure::Check => ExitCode::from(3),
            }
        }
    }
}

/// Binary formats of at most 31 digits use machine integers.
enum Backend {
    Hardware,
    Small(SmallBinary),
    Model(GenericFormat),
}

fn backend(descriptor: &str) -> Result<Backend, Failure> {
    let f = parse_format(descriptor)?;
    if f == GenericFormat::binary64() {
        return Ok(Backend::Hardware);
    }
    if f.beta() == 2 {
        if let Ok(s) = SmallBinary::from_model(&f) {
            return Ok(Backend::Small(s));
        }
    }
    Ok(Backend::Model(f))
}

fn sign_text(s: Option<Ordering>) -> &'static str {
    match s {
        Some(Ordering::Greater) => "+",
        Some(Ordering::Less) => "-",
        Some(Ordering::Equal) => "0",
        None => "?",
    }
}

fn decimal(x: &BigRational) -> String {
    format_decimal(x, 17)
}

struct EvalRequest {
    src: String,
    bindings: Bindings,
    opts: EvalOptions,
    summary: bool,
}

fn run_eval<A: FloatArith>(arith: &A, req: &EvalRequest, out: Out) -> Result<(), Failure> {
    let expr = parse_expr(&req.src)?;
    let res = eval_adaptive(arith, &expr, &req.bindings, &req.opts)?;
    let sign = sign_text(res.sign);
    if req.summary {
        writeln!(
            out,
            "sign={sign} value={} bound={} components={} firings={} complete={}",
            decimal(&res.value),
            decimal(&res.bound),
            res.components.len(),
            res.firings(),
            res.complete
        )?;
        return Ok(());
    }
    writeln!(out, "format={}", format_format(arith.model()))?;
    writeln!(out, "target={}", decimal(&req.opts.target))?;
    writeln!(out, "sign={sign}")?;
    writeln!(out, "value={}", decimal(&res.value))?;
    writeln!(out, "bound={}", decimal(&res.bound))?;
    writeln!(out, "complete={}", res.complete)?;
    writeln!(out, "components={}", res.components.len())?;
    for (i, c) in res.components.iter().enumerate() {
        writeln!(out, "component.{i}={}", arith.display(c))?;
    }
    writeln!(out, "firings={}", res.firings())?;
    for (stage, n) in &res.stats {
        writeln!(out, "stage.{stage}={n}")?;
    }
    for line in &res.trace {
        writeln!(out, "trace={line}")?;
    }
    Ok(())
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<BigRational>>, Failure> {
    s.split(';')
        .map(|row| {
            row.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_rational(t).map_err(Failure::from))
                .collect()
        })
        .collect()
}

fn run_det<A: FloatArith>(arith: &A, m: &[Vec<BigRational>], trace: bool, out: Out) -> Result<(), Failure> {
    let res = sign_det_with_stats(arith, m)?;
    writeln!(out, "sign={}", sign_text(Some(res.sign)))?;
    writeln!(out, "pulled={}", res.pulled)?;
    writeln!(out, "firings={}", total_firings(&res.stats))?;
    if trace {
        for (stage, n) in &res.stats {
            writeln!(out, "stage.{stage}={n}")?;
        }
    }
    Ok(())
}

fn convert(input: Option<String>, from: &str, to: Option<&str>, style: Style, out: Out) -> Result<(), Failure> {
    let from = parse_format(from)?;
    let to = match to {
        Some(t) => parse_format(t)?,
        None => from.clone(),
    };
    let style = match style {
        Style::Pair => FloatStyle::Pair,
        Style::Hex => FloatStyle::Hex,
    };
    if style == FloatStyle::Hex && to.beta() != 2 {
        return Err(Failure::Usage("hexadecimal output needs a radix-2 format".into()));
    }
    let reader: Box<dyn BufRead> = match input.as_deref() {
        None | Some("-") => Box::new(io::BufReader::new(io::stdin())),
        Some(path) => Box::new(io::BufReader::new(std::fs::File::open(path)?)),
    };
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            writeln!(out, "{line}")?;
            continue;
        }
        let parsed =
            parse_expansion_line(&from, &line).map_err(|e| Failure::Usage(format!("line {}: {e}", lineno + 1)))?;
        let components = parsed
            .components
            .iter()
            .map(|c| to.from_bfloat(c).and_then(|f| to.canonicalize(&f)))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Numeric(format!("line {}: {e}", lineno + 1)))?;
        let line = ExpansionLine { epsilon: parsed.epsilon, components };
        writeln!(out, "{}", format_expansion_line(&to, &line, style))?;
    }
    Ok(())
}

fn run(command: Command, out: Out) -> Result<(), Failure> {
    match command {
        Command::Eval { expr, target, digits, format, trace, bind, summary } => {
            let target = parse_rational(&target)?;
            if target < BigRational::zero() {
                return Err(Failure::Usage("target must not be negative".into()));
            }
            let mut bindings = Bindings::new();
            for b in &bind {
                let (name, value) =
                    b.split_once('=').ok_or_else(|| Failure::Usage(format!("binding `{b}` is not name=value")))?;
                bindings.insert(name.trim().to_string(), parse_rational(value)?);
            }
            let opts = EvalOptions { target, max_components: digits, trace, ..Default::default() };
            let req = EvalRequest { src: expr, bindings, opts, summary };
            match backend(&format.format)? {
                Backend::Hardware => run_eval(&Binary64, &req, out),
                Backend::Small(s) => run_eval(&s, &req, out),
                Backend::Model(f) => run_eval(&f, &req, out),
            }
        }
        Command::Det { matrix, format, trace } => {
            let m = parse_matrix(&matrix)?;
            match backend(&format.format)? {
                Backend::Hardware => run_det(&Binary64, &m, trace, out),
                Backend::Small(s) => run_det(&s, &m, trace, out),
                Backend::Model(f) => run_det(&f, &m, trace, out),
            }
        }
        Command::Check { tag, seed, format, beta, digits } => {
            let format = format.as_deref().map(parse_format).transpose()?;
            let opts = CheckOptions { seed, format, beta, division_steps: digits };
            let reports = if tag == "all" { check_all(&opts)? } else { check_theorem(&tag, &opts)? };
            let mut ok = true;
            for r in &reports {
                writeln!(out, "{r}")?;
                ok &= r.ok();
            }
            let failed = reports.iter().filter(|r| !r.ok()).count();
            writeln!(out, "summary checks={} failed={failed}", reports.len())?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Check)
            }
        }
        Command::Convert { input, from, to, style } => convert(input, &from, to.as_deref(), style, out),
    }
}
