//! `refflow` command-line interface.

use std::fs;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use refflow::asymmetry::{export_heatmap, ra_matrix, EntityFilter};
use refflow::corpus::ingest_works;
use refflow::cube::CountsCube;
use refflow::error::{Error, Result};
use refflow::fetch::{FetchClient, FetchConfig, HttpTransport, SnapshotPaths};
use refflow::indicators::{indicator_table, DenomMode, Granularity, SchemeSel};
use refflow::registry::{builtin_schemes, load_periods, load_registry};
use refflow::report::{load_config, run_pipeline};
use refflow::robustness::field_indicators_by_scheme;
use refflow::share::format_share;
use refflow::stats::{permutation_test, SampleSet};

#[derive(Parser)]
#[command(name = "refflow", version, about = "Citation-flow analytics engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch work metadata for the registry's journals from the API.
    Fetch {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        periods: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        base_url: String,
        #[arg(long, default_value_t = 10.0)]
        rps: f64,
        #[arg(long, default_value_t = 200)]
        page_size: u32,
        #[arg(long, default_value_t = 5)]
        max_retries: u32,
        #[arg(long, default_value = "REFFLOW_API_KEY")]
        api_key_env: String,
    },
    /// Ingest a works JSONL stream and print the ingest report.
    Ingest {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        periods: PathBuf,
        #[arg(long)]
        works: PathBuf,
        #[arg(long)]
        cited_metadata: Option<PathBuf>,
    },
    /// Build a counts-cube snapshot from a works stream.
    Cube {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        periods: PathBuf,
        #[arg(long)]
        works: PathBuf,
        #[arg(long)]
        cited_metadata: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute indicator rows from a cube snapshot.
    Indicators {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long)]
        granularity: String,
        #[arg(long)]
        period: String,
        #[arg(long, default_value = "econlit")]
        scheme: String,
        #[arg(long)]
        journal_only_denominator: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a reference-asymmetry matrix in heatmap long format.
    Asymmetry {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long)]
        granularity: String,
        #[arg(long)]
        period: String,
        #[arg(long, default_value = "econlit")]
        scheme: String,
        #[arg(long)]
        cluster: Option<u32>,
        #[arg(long, num_args = 2)]
        cross: Option<Vec<u32>>,
        #[arg(long)]
        journal_only_denominator: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// k-sample energy equality test over a scatter-point CSV.
    TestEquality {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "period")]
        groups: String,
        #[arg(long, default_value_t = 9999)]
        n: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Field-level indicators under alternative classification schemes.
    Robustness {
        #[arg(long)]
        cube: PathBuf,
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        #[arg(long)]
        period: String,
        #[arg(long)]
        cited_scheme: Option<String>,
        #[arg(long)]
        journal_only_denominator: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a declarative pipeline from a TOML config.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_cube(path: &PathBuf) -> Result<CountsCube> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    CountsCube::read_snapshot(BufReader::new(file))
}

fn denom_mode(journal_only: bool) -> DenomMode {
    if journal_only {
        DenomMode::JournalOnly
    } else {
        DenomMode::AllOutlets
    }
}

fn build_store(
    registry_path: &PathBuf,
    clusters: &PathBuf,
    periods_path: &PathBuf,
    works: &PathBuf,
    cited_metadata: Option<&PathBuf>,
) -> Result<(refflow::registry::Registry, refflow::corpus::CorpusStore)> {
    let registry = load_registry(registry_path, clusters, &builtin_schemes())?;
    let periods = load_periods(periods_path)?;
    let file = fs::File::open(works).map_err(|e| Error::io(works, e))?;
    let mut store = ingest_works(BufReader::new(file), &registry, &periods)?;
    if let Some(meta) = cited_metadata {
        let file = fs::File::open(meta).map_err(|e| Error::io(meta, e))?;
        store.load_cited_metadata(BufReader::new(file))?;
    }
    Ok((registry, store))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fetch {
            registry,
            clusters,
            periods,
            out,
            base_url,
            rps,
            page_size,
            max_retries,
            api_key_env,
        } => {
            let reg = load_registry(&registry, &clusters, &builtin_schemes())?;
            let windows = load_periods(&periods)?;
            let config = FetchConfig {
                base_url,
                api_key: std::env::var(&api_key_env).ok(),
                requests_per_second: rps,
                page_size,
                max_retries,
                out_dir: out.clone(),
            };
            config.validate()?;
            let paths = SnapshotPaths::new(&out)?;
            let transport = HttpTransport::new(&config);
            let mut client = FetchClient::new(config, transport)?;
            for journal_id in reg.journals.keys() {
                for window in &windows {
                    let cp = client.fetch_journal_works(journal_id, window, &paths)?;
                    eprintln!(
                        "{journal_id} {}: {} records",
                        window.period_id, cp.records_written
                    );
                }
            }
            Ok(())
        }
        Command::Ingest {
            registry,
            clusters,
            periods,
            works,
            cited_metadata,
        } => {
            let (_, store) =
                build_store(&registry, &clusters, &periods, &works, cited_metadata.as_ref())?;
            let report = serde_json::json!({
                "stored": store.report.stored,
                "malformed": store.report.malformed,
                "missing_journal_id": store.report.missing_journal_id,
                "missing_year": store.report.missing_year,
                "outside_windows": store.report.outside_windows,
                "unknown_journal": store.report.unknown_journal,
                "works_per_period": store.works_per_period(),
                "refs_per_period": store.refs_per_period(),
            });
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(())
        }
        Command::Cube {
            registry,
            clusters,
            periods,
            works,
            cited_metadata,
            out,
        } => {
            let (reg, store) =
                build_store(&registry, &clusters, &periods, &works, cited_metadata.as_ref())?;
            let cube = CountsCube::build(&store, &reg);
            let mut buf = Vec::new();
            cube.write_snapshot(&mut buf)?;
            fs::write(&out, buf).map_err(|e| Error::io(&out, e))?;
            Ok(())
        }
        Command::Indicators {
            cube,
            granularity,
            period,
            scheme,
            journal_only_denominator,
            out,
        } => {
            let cube = read_cube(&cube)?;
            let granularity = Granularity::parse(&granularity)?;
            let sel = SchemeSel::same(&scheme);
            let denom = denom_mode(journal_only_denominator);
            let (rows, sidecar) = indicator_table(&cube, &sel, denom, granularity, &period)?;
            let mut f = fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            writeln!(f, "scheme,period,granularity,scope,type,S,R,I")
                .map_err(|e| Error::io(&out, e))?;
            for row in rows {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{}",
                    row.scheme,
                    row.period_id,
                    row.granularity.as_str(),
                    row.scope_id,
                    row.itype.code(),
                    row.s,
                    row.r,
                    format_share(row.share)
                )
                .map_err(|e| Error::io(&out, e))?;
            }
            for entry in sidecar {
                eprintln!("skipped {}: {}", entry.scope_id, entry.reason);
            }
            Ok(())
        }
        Command::Asymmetry {
            cube,
            granularity,
            period,
            scheme,
            cluster,
            cross,
            journal_only_denominator,
            out,
        } => {
            let cube = read_cube(&cube)?;
            let granularity = Granularity::parse(&granularity)?;
            let filter = match (cluster, cross) {
                (Some(c), None) => EntityFilter::WithinCluster(c),
                (None, Some(pair)) => EntityFilter::CrossClusters(pair[0], pair[1]),
                (None, None) => match granularity {
                    Granularity::Cluster => EntityFilter::AllClusters,
                    Granularity::Journal => EntityFilter::AllJournals,
                    Granularity::Field => {
                        return Err(Error::usage("asymmetry granularity must be cluster or journal"))
                    }
                },
                _ => return Err(Error::usage("--cluster and --cross are mutually exclusive")),
            };
            let sel = SchemeSel::same(&scheme);
            let denom = denom_mode(journal_only_denominator);
            let matrix = ra_matrix(&cube, &sel, denom, granularity, &filter, &period)?;
            let mut buf = Vec::new();
            export_heatmap(&matrix, &mut buf)?;
            fs::write(&out, buf).map_err(|e| Error::io(&out, e))?;
            for entry in &matrix.excluded {
                eprintln!("excluded {}: {}", entry.scope_id, entry.reason);
            }
            Ok(())
        }
        Command::TestEquality {
            points,
            groups,
            n,
            seed,
        } => {
            if groups != "period" {
                return Err(Error::usage("only --groups period is supported"));
            }
            let samples = read_points(&points)?;
            let result = permutation_test(&samples, n, seed)?;
            println!(
                "E={:.6} p={:.6} n_permutations={} seed={}",
                result.e, result.p_value, result.n_permutations, result.seed
            );
            Ok(())
        }
        Command::Robustness {
            cube,
            schemes,
            period,
            cited_scheme,
            journal_only_denominator,
            out,
        } => {
            if schemes.is_empty() {
                return Err(Error::usage("at least one scheme is required"));
            }
            let cube = read_cube(&cube)?;
            let denom = denom_mode(journal_only_denominator);
            let mut f = fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
            writeln!(f, "scheme,period,granularity,scope,type,S,R,I")
                .map_err(|e| Error::io(&out, e))?;
            for scheme in &schemes {
                let rows = field_indicators_by_scheme(
                    &cube,
                    scheme,
                    &period,
                    denom,
                    cited_scheme.as_deref(),
                )?;
                for row in rows {
                    writeln!(
                        f,
                        "{},{},{},{},{},{},{},{}",
                        row.scheme,
                        row.period_id,
                        row.granularity.as_str(),
                        row.scope_id,
                        row.itype.code(),
                        row.s,
                        row.r,
                        format_share(row.share)
                    )
                    .map_err(|e| Error::io(&out, e))?;
                }
            }
            Ok(())
        }
        Command::Report { config, out } => {
            let parsed = load_config(&config)?;
            let command: Vec<String> = std::env::args().collect();
            run_pipeline(&parsed, &config, &out, &command.join(" "))?;
            Ok(())
        }
    }
}

/// Read a `scope,period,x,y` CSV into period-labeled bivariate samples.
/// Lines starting with `#` are metadata and skipped.
fn read_points(path: &PathBuf) -> Result<SampleSet> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data: String = raw
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(data.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::data(format!("bad points csv: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("points csv missing column '{name}'")))
    };
    let (period_col, x_col, y_col) = (col("period")?, col("x")?, col("y")?);
    let mut groups: std::collections::BTreeMap<String, Vec<Vec<f64>>> = Default::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::data(format!("bad points csv: {e}")))?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::data(format!("bad number '{}' in points csv", &record[i])))
        };
        groups
            .entry(record[period_col].to_string())
            .or_default()
            .push(vec![parse(x_col)?, parse(y_col)?]);
    }
    SampleSet::new(groups.into_iter().collect())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
