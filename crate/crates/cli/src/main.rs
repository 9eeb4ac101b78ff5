//! `satfrac`: command-line access to saturated-fraction certification,
//! counting, enumeration, sampling and fixed-margin Markov chains.

mod report;

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use satfrac::cycles::{decompose_cycle, find_cycle};
use satfrac::format::{self, Format};
use satfrac::linalg::ModelMatrix;
use satfrac::markov::{fiber_components, fiber_enumerate, markov_basis_with, MarkovChain};
use satfrac::saturation::{
    count_saturated, count_with_margins, enumerate_saturated, generate_with_margins,
    sample_stream, saturation_probability,
};
use satfrac::{BinaryTable, DesignSize, Fraction, KCycle, Margins, DEFAULT_CAP};

use report::{points_json, points_text, CliError, Report, Status};

#[derive(Parser)]
#[command(name = "satfrac", version, about = "Saturated fractions of two-factor designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a fraction as saturated (exit 0) or not (exit 1)
    Check {
        #[command(flatten)]
        input: Input,
        /// Also run the determinant test and fail loudly if the two disagree
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Print the full model matrix X (with --I/--J) or X_F for a fraction
    Matrix {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        size: SizeArgs,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Exact determinant of X_F
    Det {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Number of saturated fractions, optionally with fixed margins
    Count {
        #[command(flatten)]
        size: SizeArgs,
        #[command(flatten)]
        margins: MarginArgs,
        /// Also report the probability that I+J-1 random points are saturated
        #[arg(long)]
        probability: bool,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Stream every saturated fraction of a design
    Enumerate {
        #[command(flatten)]
        size: SizeArgs,
        #[command(flatten)]
        margins: MarginArgs,
        #[command(flatten)]
        stream: StreamOut,
    },
    /// Stream every saturated fraction with the given margins
    Generate {
        #[command(flatten)]
        margins: RequiredMargins,
        #[command(flatten)]
        stream: StreamOut,
    },
    /// Draw saturated fractions uniformly at random
    Sample {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long)]
        seed: u64,
        /// Number of draws
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Grid)]
        format: FormatArg,
    },
    /// Split a k-cycle into two disjoint strength-1 orthogonal arrays
    Decompose {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Print a cycle contained in a fraction, or "acyclic"
    FindCycle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Print the circuit Markov basis as signed grids
    Basis {
        #[command(flatten)]
        size: SizeArgs,
        /// Keep only moves of degree at most this
        #[arg(long)]
        max_degree: Option<usize>,
        #[command(flatten)]
        out: ReportOut,
    },
    /// Random walk on the fiber of a starting table
    Walk {
        /// Starting table (grid or JSON); standard input when omitted
        #[arg(long)]
        start: Option<PathBuf>,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        seed: u64,
        /// Emit the state every this many steps (and at the start and end)
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        emit_every: u64,
        #[arg(long)]
        max_degree: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Grid)]
        format: FormatArg,
    },
    /// List every 0/1 table with the given margins
    Fiber {
        #[command(flatten)]
        margins: RequiredMargins,
        #[command(flatten)]
        stream: StreamOut,
    },
    /// Check that the circuit basis connects the fiber of the given margins
    Verify {
        #[command(flatten)]
        margins: RequiredMargins,
        #[arg(long)]
        max_degree: Option<usize>,
        #[command(flatten)]
        out: ReportOut,
    },
}

#[derive(Args)]
struct Input {
    /// Fraction file (grid or JSON); standard input when omitted or "-"
    file: Option<PathBuf>,
}

#[derive(Args)]
struct SizeArgs {
    /// Number of levels of factor A
    #[arg(long = "I", value_name = "I")]
    i: Option<usize>,
    /// Number of levels of factor B
    #[arg(long = "J", value_name = "J")]
    j: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
}

#[derive(Args)]
struct MarginArgs {
    /// Row and column margins, e.g. --margins 3,1,2 3,1,1,1
    #[arg(long, num_args = 2, value_names = ["A", "B"], value_parser = parse_list)]
    margins: Option<Vec<Levels>>,
}

#[derive(Args)]
struct RequiredMargins {
    /// Row and column margins, e.g. --margins 3,1,2 3,1,1,1
    #[arg(long, num_args = 2, value_names = ["A", "B"], value_parser = parse_list, required = true)]
    margins: Vec<Levels>,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: u64,
}

#[derive(Args)]
struct ReportOut {
    /// Print a JSON report instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct StreamOut {
    #[arg(long, value_enum, default_value_t = FormatArg::Grid)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Grid,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Grid => Format::Grid,
            FormatArg::Json => Format::Json,
        }
    }
}

/// One comma-separated margin vector.
#[derive(Clone, Debug)]
struct Levels(Vec<usize>);

fn parse_list(s: &str) -> Result<Levels, String> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("{x:?} is not a non-negative integer"))
        })
        .collect::<Result<_, _>>()
        .map(Levels)
}

fn read_input(path: Option<&PathBuf>) -> Result<String, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => fs::read_to_string(p)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn read_fraction(path: Option<&PathBuf>) -> Result<Fraction, CliError> {
    let text = read_input(path)?;
    format::parse_fraction(&text).map_err(|e| CliError::Input(e.to_string()))
}

impl SizeArgs {
    fn size(&self) -> Result<Option<DesignSize>, CliError> {
        match (self.i, self.j) {
            (Some(i), Some(j)) => DesignSize::new(i, j)
                .map(Some)
                .map_err(|e| CliError::Input(e.to_string())),
            (None, None) => Ok(None),
            _ => Err(CliError::Input("--I and --J must be given together".into())),
        }
    }

    fn required(&self) -> Result<DesignSize, CliError> {
        self.size()?
            .ok_or_else(|| CliError::Input("--I and --J are required".into()))
    }
}

fn margins_from(v: &[Levels]) -> Result<Margins, CliError> {
    Margins::new(v[0].0.clone(), v[1].0.clone()).map_err(|e| CliError::Input(e.to_string()))
}

/// Margins and design size, with the size implied by the margins when
/// `--I/--J` are absent and checked against them otherwise.
fn sized_margins(size: &SizeArgs, margins: &MarginArgs) -> Result<(DesignSize, Option<Margins>), CliError> {
    let m = margins.margins.as_deref().map(margins_from).transpose()?;
    match (size.size()?, m) {
        (Some(s), Some(m)) if s != m.size() => Err(CliError::Input(format!(
            "margins {m} describe a {} design, not {s}",
            m.size()
        ))),
        (_, Some(m)) => Ok((m.size(), Some(m))),
        (Some(s), None) => Ok((s, None)),
        (None, None) => Err(CliError::Input("give --I and --J, or --margins".into())),
    }
}

fn check(input: &Input, oracle: bool) -> Result<Report, CliError> {
    let f = read_fraction(input.file.as_ref())?;
    let size = f.size();
    let required = size.parameters();
    let cycle = find_cycle(&f);
    let saturated = f.len() == required && cycle.is_none();
    let mut report = Report::new("check", if saturated { Status::Ok } else { Status::Fail });
    report.payload = json!({
        "size": [size.rows(), size.cols()],
        "points": f.len(),
        "required": required,
        "saturated": saturated,
        "cycle": cycle.as_ref().map(|c| points_json(c.points())),
    });
    report.text = if f.len() != required {
        format!("wrong size: {} points, a saturated {size} fraction has {required}", f.len())
    } else if let Some(c) = &cycle {
        format!("not saturated: cycle = {}", points_text(c.points()))
    } else {
        "saturated".to_string()
    };
    if f.len() != required {
        if let Some(c) = &cycle {
            report
                .diagnostics
                .push(format!("also contains the cycle {}", points_text(c.points())));
        }
    }
    if oracle {
        let det = if f.len() == required {
            Some(ModelMatrix::for_fraction(&f).determinant()?)
        } else {
            None
        };
        report.payload["determinant"] = json!(det);
        let by_det = det.is_some_and(|d| d != 0);
        let by_union_find = f.len() == required && !satfrac::cycles::contains_cycle(&f);
        let agrees = by_det == saturated && by_union_find == saturated;
        report.payload["oracle_agrees"] = json!(agrees);
        if !agrees {
            report.status = Status::Fail;
            report.diagnostics.push(format!(
                "ORACLE DISAGREEMENT: cycle search says {saturated}, union-find says {by_union_find}, determinant says {by_det}"
            ));
            return Ok(report);
        }
        report.diagnostics.push(match det {
            Some(d) => format!("oracle: det(X_F) = {d}, agrees with the cycle test"),
            None => "oracle: X_F is not square, agrees with the cycle test".to_string(),
        });
    }
    Ok(report)
}

fn matrix(input: &Input, size: &SizeArgs) -> Result<Report, CliError> {
    let m = match size.size()? {
        Some(s) if input.file.is_none() => ModelMatrix::full(s),
        Some(_) => return Err(CliError::Input("give either a fraction or --I/--J, not both".into())),
        None => ModelMatrix::for_fraction(&read_fraction(input.file.as_ref())?),
    };
    let mut report = Report::new("matrix", Status::Ok);
    report.payload = json!({
        "size": [m.size().rows(), m.size().cols()],
        "labels": points_json(m.labels()),
        "rows": m.rows(),
    });
    report.text = m.to_string().trim_end().to_string();
    report
        .diagnostics
        .push(format!("{} x {} matrix", m.nrows(), m.ncols()));
    Ok(report)
}

fn det(input: &Input) -> Result<Report, CliError> {
    let f = read_fraction(input.file.as_ref())?;
    let d = ModelMatrix::for_fraction(&f).determinant()?;
    let mut report = Report::new("det", Status::Ok);
    report.payload = json!({ "determinant": d });
    report.text = d.to_string();
    Ok(report)
}

fn count(size: &SizeArgs, margins: &MarginArgs, probability: bool) -> Result<Report, CliError> {
    let (s, m) = sized_margins(size, margins)?;
    let mut report = Report::new("count", Status::Ok);
    let n = match &m {
        Some(m) => count_with_margins(m)?,
        None => count_saturated(s),
    };
    report.payload = json!({
        "size": [s.rows(), s.cols()],
        "margins": m.as_ref().map(|m| json!([m.a(), m.b()])),
        "count": n.to_string(),
    });
    report.text = n.to_string();
    if probability {
        if m.is_some() {
            return Err(CliError::Input("--probability does not combine with --margins".into()));
        }
        let p = saturation_probability(s);
        let decimal = p.to_decimal(2);
        report.payload["probability"] = json!({
            "saturated": p.saturated.to_string(),
            "subsets": p.subsets.to_string(),
            "decimal": decimal,
        });
        report.text.push_str(&format!("\n{p} = {decimal}"));
    }
    Ok(report)
}

fn decompose(input: &Input) -> Result<Report, CliError> {
    let f = read_fraction(input.file.as_ref())?;
    let cycle = KCycle::new(f)?;
    let pair = decompose_cycle(&cycle);
    let mut report = Report::new("decompose", Status::Ok);
    report.payload = json!({
        "k": cycle.k(),
        "first": points_json(pair.first().points()),
        "second": points_json(pair.second().points()),
    });
    report.text = format!(
        "{}\n{}",
        points_text(pair.first().points()),
        points_text(pair.second().points())
    );
    report.diagnostics.push(format!("{}-cycle", cycle.k()));
    Ok(report)
}

fn find_cycle_cmd(input: &Input) -> Result<Report, CliError> {
    let f = read_fraction(input.file.as_ref())?;
    let cycle = find_cycle(&f);
    let mut report = Report::new("find-cycle", Status::Ok);
    report.payload = json!({
        "acyclic": cycle.is_none(),
        "k": cycle.as_ref().map(KCycle::k),
        "cycle": cycle.as_ref().map(|c| points_json(c.points())),
    });
    report.text = match &cycle {
        Some(c) => {
            report.diagnostics.push(format!("{}-cycle", c.k()));
            points_text(c.points())
        }
        None => "acyclic".to_string(),
    };
    Ok(report)
}

fn basis(size: &SizeArgs, max_degree: Option<usize>) -> Result<Report, CliError> {
    let s = size.required()?;
    let moves = markov_basis_with(s, max_degree, size.cap)?;
    let mut by_degree = std::collections::BTreeMap::new();
    for m in &moves {
        *by_degree.entry(m.degree()).or_insert(0usize) += 1;
    }
    let mut report = Report::new("basis", Status::Ok);
    report.payload = json!({
        "size": [s.rows(), s.cols()],
        "count": moves.len(),
        "by_degree": by_degree
            .iter()
            .map(|(k, n)| (k.to_string(), json!(n)))
            .collect::<serde_json::Map<_, _>>(),
        "moves": moves.iter().map(|m| m.rows()).collect::<Vec<_>>(),
    });
    report.text = moves
        .iter()
        .map(|m| m.to_string().trim_end().to_string())
        .collect::<Vec<_>>()
        .join("\n\n");
    let breakdown: Vec<String> = by_degree
        .iter()
        .map(|(k, n)| format!("degree {k}: {n}"))
        .collect();
    report
        .diagnostics
        .push(format!("{} moves ({})", moves.len(), breakdown.join(", ")));
    Ok(report)
}

fn verify(margins: &RequiredMargins, max_degree: Option<usize>) -> Result<Report, CliError> {
    let m = margins_from(&margins.margins)?;
    let moves = markov_basis_with(m.size(), max_degree, margins.cap)?;
    let fiber = fiber_enumerate(&m, margins.cap)?;
    let components = fiber_components(&fiber, &moves);
    let connected = components <= 1;
    let mut report = Report::new("verify", if connected { Status::Ok } else { Status::Fail });
    report.payload = json!({
        "margins": [m.a(), m.b()],
        "moves": moves.len(),
        "tables": fiber.len(),
        "components": components,
        "connected": connected,
    });
    report.text = format!(
        "{}: {} tables, {components} component{}, {} moves",
        if connected { "connected" } else { "not connected" },
        fiber.len(),
        if components == 1 { "" } else { "s" },
        moves.len()
    );
    Ok(report)
}

/// Writes records one at a time: JSON one per line, grids separated by a
/// blank line.
struct Records<W: Write> {
    out: W,
    format: Format,
    first: bool,
}

impl<W: Write> Records<W> {
    fn new(out: W, format: Format) -> Self {
        Self { out, format, first: true }
    }

    fn fraction(&mut self, f: &Fraction) -> io::Result<()> {
        self.record(format::render(f, self.format))
    }

    fn table(&mut self, t: &BinaryTable, step: Option<u64>) -> io::Result<()> {
        let f = t.to_fraction();
        match (self.format, step) {
            (Format::Json, Some(s)) => {
                let mut v = format::to_json_value(&f);
                v["step"] = json!(s);
                self.record(format!("{v}\n"))
            }
            _ => self.fraction(&f),
        }
    }

    fn record(&mut self, text: String) -> io::Result<()> {
        if self.format == Format::Grid && !self.first {
            self.out.write_all(b"\n")?;
        }
        self.first = false;
        self.out.write_all(text.as_bytes())
    }

    fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn stdout_records(format: FormatArg) -> Records<BufWriter<io::StdoutLock<'static>>> {
    Records::new(BufWriter::new(io::stdout().lock()), format.into())
}

fn stream_fractions<I>(it: I, format: FormatArg) -> Result<(), CliError>
where
    I: IntoIterator<Item = Fraction>,
{
    let mut out = stdout_records(format);
    for f in it {
        out.fraction(&f)?;
    }
    Ok(out.finish()?)
}

fn generate_stream(m: &Margins, cap: u64, format: FormatArg) -> Result<(), CliError> {
    let n = count_with_margins(m)?;
    if n > cap.into() {
        return Err(satfrac::Error::CapExceeded {
            what: "generation",
            needed: n.to_string(),
            cap,
        }
        .into());
    }
    stream_fractions(generate_with_margins(m)?, format)
}

fn walk(
    start: Option<&PathBuf>,
    steps: u64,
    seed: u64,
    emit_every: u64,
    max_degree: Option<usize>,
    cap: u64,
    format: FormatArg,
) -> Result<(), CliError> {
    let table = read_fraction(start)?.to_table();
    let moves = markov_basis_with(table.size(), max_degree, cap)?;
    let mut chain = MarkovChain::new(table, &moves, seed)?;
    let mut out = stdout_records(format);
    out.table(chain.state(), Some(0))?;
    for s in 1..=steps {
        chain.step();
        if s % emit_every == 0 || s == steps {
            out.table(chain.state(), Some(s))?;
        }
    }
    Ok(out.finish()?)
}

fn fiber(margins: &RequiredMargins, format: FormatArg) -> Result<(), CliError> {
    let m = margins_from(&margins.margins)?;
    let tables = fiber_enumerate(&m, margins.cap)?;
    let mut out = stdout_records(format);
    for t in &tables {
        out.table(t, None)?;
    }
    Ok(out.finish()?)
}

fn run(cli: Cli) -> Result<Option<(Report, bool)>, CliError> {
    let report = match cli.command {
        Command::Check { input, oracle, out } => (check(&input, oracle)?, out.json),
        Command::Matrix { input, size, out } => (matrix(&input, &size)?, out.json),
        Command::Det { input, out } => (det(&input)?, out.json),
        Command::Count { size, margins, probability, out } => {
            (count(&size, &margins, probability)?, out.json)
        }
        Command::Decompose { input, out } => (decompose(&input)?, out.json),
        Command::FindCycle { input, out } => (find_cycle_cmd(&input)?, out.json),
        Command::Basis { size, max_degree, out } => (basis(&size, max_degree)?, out.json),
        Command::Verify { margins, max_degree, out } => (verify(&margins, max_degree)?, out.json),
        Command::Enumerate { size, margins, stream } => {
            match sized_margins(&size, &margins)? {
                (_, Some(m)) => generate_stream(&m, size.cap, stream.format)?,
                (s, None) => stream_fractions(enumerate_saturated(s, size.cap)?, stream.format)?,
            }
            return Ok(None);
        }
        Command::Generate { margins, stream } => {
            generate_stream(&margins_from(&margins.margins)?, margins.cap, stream.format)?;
            return Ok(None);
        }
        Command::Sample { size, seed, count, format } => {
            let s = size.required()?;
            stream_fractions(sample_stream(s, seed).take(count as usize), format)?;
            return Ok(None);
        }
        Command::Walk { start, steps, seed, emit_every, max_degree, cap, format } => {
            walk(start.as_ref(), steps, seed, emit_every, max_degree, cap, format)?;
            return Ok(None);
        }
        Command::Fiber { margins, stream } => {
            fiber(&margins, stream.format)?;
            return Ok(None);
        }
    };
    Ok(Some(report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some((report, json))) => report.emit(json),
        Err(e) => e.exit(),
    }
}
