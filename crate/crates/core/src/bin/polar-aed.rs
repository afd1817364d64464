use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polar_aed::aed::{greedy_select, training_frames, AeDecoder};
use polar_aed::bch::{concat_bler, ConcatSpec};
use polar_aed::perm::{preserves_code, sample_ensemble, sample_pool, SamplingPolicy};
use polar_aed::plot::emit_plot;
use polar_aed::polar::puf_code_1024;
use polar_aed::sc::{plan_bitwidths, PlanOptions, ValueSet};
use polar_aed::sim::{run_sweep, write_csv_to, ExperimentConfig};
use polar_aed::{Architecture, CodeSpec, DecodeTree, EnsembleSpec};

#[derive(Parser)]
#[command(
    name = "polar-aed",
    version,
    about = "Automorphism ensemble decoding of polar codes for PUF key extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code spec from partial-order generators.
    Construct {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        generators: Vec<usize>,
        /// Block profile, least significant block first.
        #[arg(long, value_delimiter = ',')]
        profile: Vec<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the pruned decoding tree with per-edge bit widths.
    Bitwidths {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long)]
        q_max: Option<u32>,
        /// Plan for debiased pair LLRs in {-2, 0, +2}.
        #[arg(long)]
        debias: bool,
    },
    /// Encode a message given as a 0/1 string.
    Encode {
        #[command(flatten)]
        code: CodeArg,
        message: String,
    },
    /// Decode a received 0/1 string (or integer LLRs).
    Decode {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long)]
        ensemble: Option<PathBuf>,
        #[arg(long)]
        q_max: Option<u32>,
        /// Comma-separated integer LLRs instead of a bit string.
        #[arg(long)]
        llr: bool,
        received: String,
    },
    #[command(subcommand)]
    Perms(PermsCommand),
    /// Monte Carlo BLER sweep.
    Simulate(SimulateArgs),
    /// Analytic BCH(1023,318) + repetition baseline as CSV.
    Baseline {
        #[arg(long, default_value_t = 7)]
        repetition: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render BLER CSVs to an SVG chart.
    Plot {
        #[arg(long, short)]
        out: PathBuf,
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct CodeArg {
    /// Code spec file; the (1024,78) PUF code when omitted.
    #[arg(long)]
    code: Option<PathBuf>,
}

impl CodeArg {
    fn load(&self) -> anyhow::Result<CodeSpec> {
        Ok(match &self.code {
            Some(p) => CodeSpec::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => puf_code_1024(),
        })
    }
}

#[derive(Subcommand)]
enum PermsCommand {
    /// Draw a random ensemble.
    Sample {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        architecture: Architecture,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Greedy data-driven selection from a random pool.
    Optimize {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        architecture: Architecture,
        #[arg(long, default_value_t = 32)]
        size: usize,
        #[arg(long, default_value_t = 128)]
        pool: usize,
        #[arg(long, default_value_t = 100_000)]
        train_frames: usize,
        #[arg(long, default_value_t = 0.26)]
        train_eps: f64,
        #[arg(long, default_value_t = 3)]
        q_max: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, env = "POLAR_AED_WORKERS")]
        workers: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Check that every member is a distinct automorphism of the code.
    Verify {
        #[command(flatten)]
        code: CodeArg,
        ensemble: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    code: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long, value_enum)]
    architecture: Option<Architecture>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    #[arg(long)]
    q_max: Option<u32>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long, env = "POLAR_AED_WORKERS")]
    workers: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Simulate the all-zero payload without enrollment.
    #[arg(long)]
    all_zero: bool,
    /// Write 0 seconds so that output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn parse_bits(s: &str) -> anyhow::Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("unexpected character {other:?} in bit string"),
        })
        .collect()
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 0 { '0' } else { '1' })
        .collect()
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::new(Vec::new(), args.seed),
    };
    cfg.seed = args.seed;
    if args.code.is_some() {
        cfg.code = args.code;
    }
    if args.ensemble.is_some() {
        cfg.ensemble = args.ensemble;
    }
    if args.architecture.is_some() {
        cfg.architecture = args.architecture;
    }
    if let Some(m) = args.size {
        cfg.ensemble_size = m;
    }
    if !args.eps.is_empty() {
        cfg.epsilons = args.eps;
    }
    if args.q_max.is_some() {
        cfg.q_max = args.q_max;
    }
    if let Some(s) = args.segments {
        cfg.segments = s;
    }
    if let Some(e) = args.min_errors {
        cfg.min_errors = e;
    }
    if let Some(f) = args.max_frames {
        cfg.max_frames = f;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if args.out.is_some() {
        cfg.output = args.out;
    }
    cfg.all_zero |= args.all_zero;
    cfg.timing &= !args.no_timing;
    let rows = run_sweep(&cfg)?;
    if cfg.output.is_none() {
        write_csv_to(std::io::stdout().lock(), &rows)?;
    } else {
        for r in &rows {
            eprintln!(
                "eps={} frames={} errors={} bler={:.4e} [{:.4e}, {:.4e}]",
                r.epsilon, r.frames, r.errors, r.bler, r.ci_low, r.ci_high
            );
        }
    }
    Ok(())
}

fn perms(cmd: PermsCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        PermsCommand::Sample {
            code,
            architecture,
            size,
            seed,
            out,
        } => {
            let code = code.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut spec = sample_ensemble(
                &code,
                architecture,
                size,
                SamplingPolicy::for_code(&code),
                &mut rng,
            )?;
            spec.seed = Some(seed);
            spec.save(&out)?;
        }
        PermsCommand::Optimize {
            code,
            architecture,
            size,
            pool,
            train_frames,
            train_eps,
            q_max,
            seed,
            workers,
            out,
        } => {
            if let Some(w) = workers {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(w)
                    .build_global()
                    .ok();
            }
            let code = code.load()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let candidates = sample_pool(
                &code,
                architecture,
                pool,
                SamplingPolicy::for_code(&code),
                &mut rng,
            )?;
            let frames = training_frames(&code, train_eps, train_frames, &mut rng)?;
            let sel = greedy_select(
                &code,
                architecture,
                &candidates,
                &frames,
                size,
                PlanOptions::binary(Some(q_max)),
            )?;
            let mut spec = sel.ensemble;
            spec.seed = Some(seed);
            spec.note = Some(format!(
                "greedy selection from {pool} candidates on {train_frames} frames at eps={train_eps}, q_max={q_max}; frames corrected after each step: {:?}",
                sel.covered
            ));
            eprintln!("frames corrected after each step: {:?}", sel.covered);
            spec.save(&out)?;
        }
        PermsCommand::Verify {
            code,
            ensemble,
            trials,
            seed,
        } => {
            let code = code.load()?;
            let spec = EnsembleSpec::load(&ensemble)?;
            let members = spec.members(code.len())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ok = true;
            for (j, p) in members.iter().enumerate() {
                if !preserves_code(&code, p, trials, &mut rng)? {
                    println!("member {j}: not an automorphism");
                    ok = false;
                }
            }
            for (b, base) in spec.bases.iter().enumerate() {
                if let Some(t) = &base.transform {
                    if t.matrix()?.is_lower_triangular() {
                        println!("base {b}: lower-triangular, absorbed by SC");
                    }
                }
            }
            let distinct: std::collections::HashSet<_> = members.iter().collect();
            if distinct.len() != members.len() {
                println!("{} duplicate members", members.len() - distinct.len());
                ok = false;
            }
            println!(
                "{} members, {} distinct, {}",
                members.len(),
                distinct.len(),
                if ok { "ok" } else { "FAILED" }
            );
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Construct {
            n,
            generators,
            profile,
            out,
        } => {
            let code = CodeSpec::from_generators(n, &generators, &profile)?;
            if let Some(p) = out {
                code.save(&p)?;
            }
            println!("N={} K={}", code.len(), code.k());
            println!("information set: {:?}", code.info_set());
        }
        Command::Bitwidths {
            code,
            q_max,
            debias,
        } => {
            let code = code.load()?;
            let tree = DecodeTree::build(&code);
            let mut options = PlanOptions::binary(q_max);
            if debias {
                options.channel = ValueSet::new([-2, 0, 2]);
            }
            let plan = plan_bitwidths(&tree, options);
            print!("{}", plan.render(&tree));
            println!("max width: {}", plan.max_width());
            println!(
                "branch edge widths (BFS): {:?}",
                plan.bfs_edge_widths(&tree)
            );
        }
        Command::Encode { code, message } => {
            let code = code.load()?;
            println!("{}", bits_to_string(&code.encode(&parse_bits(&message)?)?));
        }
        Command::Decode {
            code,
            ensemble,
            q_max,
            llr,
            received,
        } => {
            let code = code.load()?;
            let spec = match ensemble {
                Some(p) => EnsembleSpec::load(&p)?,
                None => EnsembleSpec::identity(),
            };
            let llrs: Vec<i32> = if llr {
                received
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<i32>()
                            .with_context(|| format!("bad LLR {v:?}"))
                    })
                    .collect::<anyhow::Result<_>>()?
            } else {
                parse_bits(&received)?
                    .into_iter()
                    .map(polar_aed::sc::bit_to_llr)
                    .collect()
            };
            let mut options = PlanOptions::binary(q_max);
            let peak = llrs
                .iter()
                .map(|v| v.unsigned_abs() as i64)
                .max()
                .unwrap_or(1)
                .max(1);
            if peak > 1 {
                options.channel = ValueSet::new(-peak..=peak);
            }
            let mut dec = AeDecoder::new(&code, &spec, options)?;
            let result = dec.decode(&llrs)?;
            println!("codeword: {}", bits_to_string(&result.codeword));
            println!(
                "message:  {}",
                bits_to_string(&code.extract_message(&result.codeword)?)
            );
            println!("winner:   {}", result.winner);
        }
        Command::Perms(cmd) => return perms(cmd),
        Command::Simulate(args) => simulate(args)?,
        Command::Baseline {
            repetition,
            eps,
            out,
        } => {
            let spec = ConcatSpec::bch_1023_318(repetition)?;
            let mut text = String::from("epsilon,bler,repetition,cells\n");
            for e in eps {
                text.push_str(&format!(
                    "{e},{:.6e},{repetition},{}\n",
                    concat_bler(e, &spec)?,
                    spec.cells()
                ));
            }
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
        }
        Command::Plot { out, csv } => emit_plot(&csv, &out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
