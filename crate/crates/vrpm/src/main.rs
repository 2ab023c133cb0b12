use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use vrpm::obj::{load_obj, save_obj, save_raw_obj};
use vrpm::{list_files, stream};
use vrpm_core::grid::MAX_BINS;
use vrpm_core::metrics::{self, KdTree, Point};
use vrpm_core::sampler::{self, SampleConfig, Trial, MIN_TOKENS};
use vrpm_core::{
    compression_report, decimate_to_pm, decode_pm, encode_pm, normalize_quantize, shapes,
    CompressionReport, CorpusSummary, GridSpec, RawMesh,
};

/// Progressive-mesh tokenizer: OBJ in, `.vrpm` token streams out, and back.
///
/// Every option can also come from a `VRPM_<NAME>` environment variable;
/// command-line flags win over the environment, which wins over defaults.
#[derive(Parser, Debug)]
#[command(name = "vrpm", version)]
struct Cli {
    /// Grid resolution per axis.
    #[arg(long, global = true, env = "VRPM_N_BINS", default_value_t = 128,
          value_parser = clap::value_parser!(u32).range(2..=MAX_BINS as i64))]
    n_bins: u32,
    /// Worker threads for directory-level commands (0 = one per core).
    #[arg(long, global = true, env = "VRPM_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Seed for every random choice.
    #[arg(long, global = true, env = "VRPM_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quantize, decimate and tokenize a mesh.
    Encode {
        input: PathBuf,
        output: PathBuf,
        /// Write the line-based text form instead of binary.
        #[arg(long)]
        text: bool,
    },
    /// Rebuild OBJ meshes from a token stream.
    Decode {
        input: PathBuf,
        out_dir: PathBuf,
        /// Stop after this many vertex splits (0 = base mesh only).
        #[arg(long, env = "VRPM_STOP_AT_K")]
        stop_at_k: Option<usize>,
        /// Write every level from the base mesh up to the stopping point.
        #[arg(long)]
        emit_all_levels: bool,
    },
    /// Decode a stream and check that every level is manifold.
    Validate { input: PathBuf },
    /// Encode every OBJ in a directory and report token statistics.
    Stats {
        dir: PathBuf,
        /// Also report the variant that spells out a third vertex per split.
        #[arg(long, env = "VRPM_NO_HALF_EDGE")]
        no_half_edge: bool,
    },
    /// Compare two directories of meshes with point-cloud metrics.
    Metrics {
        generated: PathBuf,
        reference: PathBuf,
        /// Surface samples per mesh.
        #[arg(long, env = "VRPM_POINTS", default_value_t = 2048,
              value_parser = clap::value_parser!(u64).range(1..))]
        points: u64,
        /// Voxel grid resolution per axis for JSD.
        #[arg(long, env = "VRPM_JSD_GRID", default_value_t = 28,
              value_parser = clap::value_parser!(u64).range(1..=1024))]
        jsd_grid: u64,
    },
    /// Draw random streams through the decoder mask and check them.
    Fuzz {
        #[arg(long, env = "VRPM_COUNT", default_value_t = 1000)]
        count: u64,
        /// Token budget per stream, excluding the closing EOS.
        #[arg(long, env = "VRPM_MAX_TOKENS", default_value_t = 512)]
        max_tokens: usize,
        /// Chance of ending a group wherever that is legal.
        #[arg(long, env = "VRPM_STOP_PROBABILITY", default_value_t = 0.05)]
        stop_probability: f64,
    },
    /// Write the procedural test corpus as OBJ files.
    Corpus { out_dir: PathBuf },
}

/// Error plus exit status: 2 for bad input data, 1 for everything else.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type CmdResult = Result<String, Failure>;

fn data(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn other(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(other)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(other)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_raw(path: &Path) -> Result<RawMesh, Failure> {
    let bytes = read(path)?;
    load_obj(&bytes)
        .map(|o| o.mesh)
        .map_err(|e| data(anyhow!("{}: {e}", path.display())))
}

fn encode_raw(
    raw: &RawMesh,
    n_bins: u32,
) -> anyhow::Result<(vrpm_core::TokenStream, CompressionReport)> {
    let (mesh, grid) = normalize_quantize(raw, n_bins)?;
    let pm = decimate_to_pm(&mesh, grid)?;
    let stream = encode_pm(&pm)?;
    Ok((stream, compression_report(&pm)))
}

fn report_fields(out: &mut String, r: &CompressionReport) {
    let _ = writeln!(out, "tokens={}", r.tokens);
    let _ = writeln!(out, "ratio={}", r.ratio);
    let _ = writeln!(out, "ratio_with_specials={}", r.ratio_with_specials);
    let _ = writeln!(out, "f0={}", r.base_faces);
    let _ = writeln!(out, "n_int={}", r.interior_splits);
    let _ = writeln!(out, "n_bnd={}", r.boundary_splits);
    let _ = writeln!(out, "faces={}", r.faces);
}

fn cmd_encode(cli: &Cli, input: &Path, output: &Path, text: bool) -> CmdResult {
    let bytes = read(input)?;
    let obj = load_obj(&bytes).map_err(|e| data(anyhow!("{}: {e}", input.display())))?;
    let (stream, report) = encode_raw(&obj.mesh, cli.n_bins)
        .map_err(|e| data(e.context(input.display().to_string())))?;
    let encoded = if text {
        stream::to_text(&stream).into_bytes()
    } else {
        stream::to_bytes(&stream)
    };
    write(output, &encoded)?;
    let mut out = String::new();
    let _ = writeln!(out, "input={}", input.display());
    let _ = writeln!(out, "output={}", output.display());
    let _ = writeln!(out, "n_bins={}", cli.n_bins);
    let _ = writeln!(out, "ignored_records={}", obj.ignored);
    report_fields(&mut out, &report);
    let _ = writeln!(out, "bytes={}", encoded.len());
    Ok(out)
}

fn read_stream(path: &Path) -> Result<vrpm_core::TokenStream, Failure> {
    let bytes = read(path)?;
    stream::parse_any(&bytes).map_err(|e| data(anyhow!("{}: format error at {e}", path.display())))
}

fn cmd_decode(input: &Path, out_dir: &Path, stop_at_k: Option<usize>, all: bool) -> CmdResult {
    let stream = read_stream(input)?;
    let pm = decode_pm(&stream).map_err(|e| data(anyhow!("{}: {e}", input.display())))?;
    let k = stop_at_k.unwrap_or(pm.len());
    if k > pm.len() {
        return Err(data(anyhow!(
            "--stop-at-k {k} exceeds the {} vertex splits in {}",
            pm.len(),
            input.display()
        )));
    }
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(other)?;
    let grid = GridSpec::unit(stream.n_bins);
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mesh".into());

    let mut out = String::new();
    let _ = writeln!(out, "input={}", input.display());
    let _ = writeln!(out, "records={}", pm.len());
    let _ = writeln!(out, "stop_at_k={k}");
    let mut levels = Vec::new();
    if all {
        let mut mesh = pm.base.clone();
        levels.push((
            0,
            save_obj(&mesh, &grid),
            mesh.face_count(),
            mesh.vertex_count(),
        ));
        for (i, rec) in pm.records[..k].iter().enumerate() {
            vrpm_core::vsplit_apply(&mut mesh, rec)
                .map_err(|e| data(anyhow!("{}: split {}: {e}", input.display(), i + 1)))?;
            levels.push((
                i + 1,
                save_obj(&mesh, &grid),
                mesh.face_count(),
                mesh.vertex_count(),
            ));
        }
    } else {
        let mesh = pm
            .reconstruct(k)
            .map_err(|e| data(anyhow!("{}: {e}", input.display())))?;
        levels.push((
            k,
            save_obj(&mesh, &grid),
            mesh.face_count(),
            mesh.vertex_count(),
        ));
    }
    for (level, bytes, faces, vertices) in &levels {
        let name = if all {
            format!("{stem}_level{level:05}.obj")
        } else if *level == pm.len() {
            format!("{stem}.obj")
        } else {
            format!("{stem}_k{level}.obj")
        };
        let path = out_dir.join(name);
        write(&path, bytes)?;
        let _ = writeln!(
            out,
            "level={level} faces={faces} vertices={vertices} file={}",
            path.display()
        );
    }
    let _ = writeln!(out, "levels_written={}", levels.len());
    Ok(out)
}

fn cmd_validate(input: &Path) -> CmdResult {
    let stream = read_stream(input)?;
    let mut out = String::new();
    let _ = writeln!(out, "input={}", input.display());
    let _ = writeln!(out, "n_bins={}", stream.n_bins);
    match sampler::verify_stream(&stream) {
        Ok(pm) => {
            let _ = writeln!(out, "valid=true");
            report_fields(&mut out, &compression_report(&pm));
            let _ = writeln!(out, "levels={}", pm.len() + 1);
            Ok(out)
        }
        Err(e) => {
            let _ = writeln!(out, "valid=false");
            print!("{out}");
            Err(data(anyhow!("{}: {e}", input.display())))
        }
    }
}

fn cmd_stats(cli: &Cli, dir: &Path, no_half_edge: bool) -> CmdResult {
    let files = list_files(dir, "obj")
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(other)?;
    if files.is_empty() {
        return Err(data(anyhow!("no .obj files in {}", dir.display())));
    }
    let results: Vec<Result<CompressionReport, String>> = files
        .par_iter()
        .map(|path| {
            let raw = load_raw(path).map_err(|f| format!("{:#}", f.error))?;
            encode_raw(&raw, cli.n_bins)
                .map(|(_, r)| r)
                .map_err(|e| format!("{e:#}"))
        })
        .collect();

    let mut out = String::new();
    let mut reports = Vec::new();
    let mut failed = 0;
    for (path, result) in files.iter().zip(&results) {
        let name = file_name(path);
        match result {
            Ok(r) => {
                let _ = write!(
                    out,
                    "file={name} tokens={} ratio={} f0={} n_int={} n_bnd={} faces={}",
                    r.tokens, r.ratio, r.base_faces, r.interior_splits, r.boundary_splits, r.faces
                );
                if no_half_edge {
                    let _ = write!(out, " no_half_edge_ratio={}", r.no_half_edge_ratio);
                }
                out.push('\n');
                reports.push(*r);
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(out, "file={name} error={e:?}");
            }
        }
    }
    let s = CorpusSummary::from_reports(&reports);
    let _ = writeln!(out, "n_bins={}", cli.n_bins);
    let _ = writeln!(out, "meshes={}", s.meshes);
    let _ = writeln!(out, "failed={failed}");
    let _ = writeln!(out, "mean_ratio={}", s.mean_ratio);
    let _ = writeln!(
        out,
        "mean_ratio_with_specials={}",
        s.mean_ratio_with_specials
    );
    let _ = writeln!(out, "m0_fraction={}", s.mean_base_fraction);
    let _ = writeln!(out, "m0_face_fraction={}", s.mean_base_face_fraction);
    let _ = writeln!(out, "boundary_fraction={}", s.boundary_fraction);
    if no_half_edge {
        let _ = writeln!(out, "no_half_edge_mean_ratio={}", s.mean_no_half_edge_ratio);
        let _ = writeln!(out, "no_half_edge_overhead={}", s.no_half_edge_overhead);
    }
    if failed > 0 {
        print!("{out}");
        return Err(data(anyhow!("{failed} of {} files failed", files.len())));
    }
    Ok(out)
}

/// Surface samples of every OBJ in `dir`, each mesh scaled into the unit
/// cube. Cloud `i` uses stream `i` of `seed`, so the same directory always
/// yields the same clouds.
fn load_clouds(dir: &Path, points: usize, seed: u64) -> Result<Vec<Vec<Point>>, Failure> {
    let files = list_files(dir, "obj")
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(other)?;
    if files.is_empty() {
        return Err(data(anyhow!("no .obj files in {}", dir.display())));
    }
    files
        .par_iter()
        .enumerate()
        .map(|(i, path)| {
            let raw = load_raw(path)?.normalized();
            let cloud =
                metrics::sample_points(&raw, points, &mut sampler::sample_rng(seed, i as u64));
            if cloud.is_empty() {
                return Err(data(anyhow!(
                    "{}: mesh has no surface area",
                    path.display()
                )));
            }
            Ok(cloud)
        })
        .collect()
}

fn distance_matrix(a: &[Vec<Point>], b: &[Vec<Point>]) -> metrics::DistanceMatrix {
    let trees_a: Vec<KdTree> = a.par_iter().map(|c| KdTree::new(c)).collect();
    let trees_b: Vec<KdTree> = b.par_iter().map(|c| KdTree::new(c)).collect();
    let data: Vec<f64> = (0..a.len() * b.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / b.len(), k % b.len());
            metrics::mean_nearest_dist2(&a[i], &trees_b[j])
                + metrics::mean_nearest_dist2(&b[j], &trees_a[i])
        })
        .collect();
    metrics::DistanceMatrix {
        rows: a.len(),
        cols: b.len(),
        data,
    }
}

fn cmd_metrics(
    cli: &Cli,
    generated: &Path,
    reference: &Path,
    points: u64,
    jsd_grid: u64,
) -> CmdResult {
    let gen = load_clouds(generated, points as usize, cli.seed)?;
    let refs = load_clouds(reference, points as usize, cli.seed)?;
    let d_gr = distance_matrix(&gen, &refs);
    let d_gg = distance_matrix(&gen, &gen);
    let d_rr = distance_matrix(&refs, &refs);
    let mmd = metrics::mmd(&d_gr);

    let mut out = String::new();
    let _ = writeln!(out, "generated={}", gen.len());
    let _ = writeln!(out, "reference={}", refs.len());
    let _ = writeln!(out, "points={points}");
    let _ = writeln!(out, "jsd_grid={jsd_grid}");
    let _ = writeln!(out, "seed={}", cli.seed);
    let _ = writeln!(out, "cov={}", metrics::cov(&d_gr));
    let _ = writeln!(out, "mmd={mmd}");
    let _ = writeln!(out, "mmd_x1e3={}", mmd * 1e3);
    let _ = writeln!(out, "one_nna={}", metrics::one_nna(&d_gg, &d_rr, &d_gr));
    let _ = writeln!(out, "jsd={}", metrics::jsd(&gen, &refs, jsd_grid as usize));
    Ok(out)
}

fn cmd_fuzz(cli: &Cli, count: u64, max_tokens: usize, stop_probability: f64) -> CmdResult {
    if max_tokens < MIN_TOKENS {
        return Err(other(anyhow!("--max-tokens must be at least {MIN_TOKENS}")));
    }
    if !(stop_probability > 0.0 && stop_probability <= 1.0) {
        return Err(other(anyhow!("--stop-probability must be in (0, 1]")));
    }
    let cfg = SampleConfig {
        n_bins: cli.n_bins,
        max_tokens,
        stop_probability,
    };
    let trials: Vec<Trial> = (0..count)
        .into_par_iter()
        .map(|i| sampler::fuzz_trial(&cfg, cli.seed, i))
        .collect();
    let r: sampler::FuzzReport = trials.into_iter().collect();
    let valid = r.masked - r.masked_errors;

    let mut out = String::new();
    let _ = writeln!(out, "samples={count}");
    let _ = writeln!(out, "seed={}", cli.seed);
    let _ = writeln!(out, "n_bins={}", cli.n_bins);
    let _ = writeln!(out, "max_tokens={max_tokens}");
    let _ = writeln!(out, "stop_probability={stop_probability}");
    let _ = writeln!(out, "masked_valid={valid}/{} valid", r.masked);
    let _ = writeln!(out, "masked_errors={}", r.masked_errors);
    let mean = if r.masked == 0 {
        0.0
    } else {
        r.masked_tokens as f64 / r.masked as f64
    };
    let _ = writeln!(out, "mean_tokens={mean}");
    let _ = writeln!(out, "unmasked_valid={}/{}", r.unmasked_valid, r.unmasked);
    let _ = writeln!(out, "unmasked_valid_rate={}", r.unmasked_valid_rate());
    for (i, e) in r.error_messages.iter().enumerate() {
        let _ = writeln!(out, "error_{i}={e:?}");
    }
    if r.masked_errors > 0 {
        print!("{out}");
        return Err(data(anyhow!(
            "{} masked samples were invalid",
            r.masked_errors
        )));
    }
    Ok(out)
}

fn cmd_corpus(cli: &Cli, out_dir: &Path) -> CmdResult {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))
        .map_err(other)?;
    let corpus = shapes::corpus(cli.seed);
    for (name, raw) in &corpus {
        write(&out_dir.join(format!("{name}.obj")), &save_raw_obj(raw))?;
    }
    Ok(format!("seed={}\nmeshes={}\n", cli.seed, corpus.len()))
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Encode {
            input,
            output,
            text,
        } => cmd_encode(cli, input, output, *text),
        Command::Decode {
            input,
            out_dir,
            stop_at_k,
            emit_all_levels,
        } => cmd_decode(input, out_dir, *stop_at_k, *emit_all_levels),
        Command::Validate { input } => cmd_validate(input),
        Command::Stats { dir, no_half_edge } => cmd_stats(cli, dir, *no_half_edge),
        Command::Metrics {
            generated,
            reference,
            points,
            jsd_grid,
        } => cmd_metrics(cli, generated, reference, *points, *jsd_grid),
        Command::Fuzz {
            count,
            max_tokens,
            stop_probability,
        } => cmd_fuzz(cli, *count, *max_tokens, *stop_probability),
        Command::Corpus { out_dir } => cmd_corpus(cli, out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build();
    let result = match pool {
        Ok(pool) => pool.install(|| run(&cli)),
        Err(e) => Err(other(e.into())),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
