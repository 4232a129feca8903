mod params;

use clap::{Args, Parser, Subcommand, ValueEnum};
use derand_core::bits::{all_strings, fmt_bits, parse_bits, Bits};
use derand_core::capp::{
    capp_exact, capp_pseudodet, capp_sample, capp_success, CappEstimate, CappInstance, GenConfig,
};
use derand_core::circuit::Circuit;
use derand_core::diag::{diag_decide, diag_sweep_csv, diag_verify, DiagInput, DiagReport};
use derand_core::kolmogorov::{
    kt, normalized, promise_instances, rk_t, rkt, rkt_census, ComplexityBudget, GapMode,
};
use derand_core::machine::{copy_printer, ToyProgram};
use derand_core::manifest::MachineManifest;
use derand_core::nw::{
    advantage_exact, advantage_sample, build_design, hybrid_predictor, NWGenerator, Prg,
    EXACT_ADVANTAGE_CAP,
};
use derand_core::primes::{find_prime_via_prg, random_seed_prime, rk_poly_prime_witness};
use derand_core::rktconstruct::{
    construct_high_rkt, embed_hard_language, extract_string, fact51_witness, DeciderSpec,
    RndSearchInstance,
};
use derand_core::sampler::SeededSampler;
use derand_core::structured::lk_hard_table;
use derand_core::{LabError, Result};
use params::{config_hash, is_ranged, parse_axis, Params};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const MANIFEST_ENV: &str = "DERAND_MANIFEST";

const EXIT_USAGE: u8 = 64;
const EXIT_BUDGET: u8 = 65;
const EXIT_ASSERTION: u8 = 70;

#[derive(Parser)]
#[command(
    name = "derand",
    version,
    about = "Toy-scale derandomization laboratory"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON object of defaults keyed by flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-bounded Kolmogorov complexity by brute force.
    Kolmo {
        #[command(subcommand)]
        op: KolmoOp,
    },
    /// Circuit acceptance probability.
    Capp(CappArgs),
    /// Nisan-Wigderson generators and distinguishers.
    Prg {
        #[command(subcommand)]
        op: PrgOp,
    },
    /// The diagonal language and its verification.
    Diag {
        #[command(subcommand)]
        op: DiagOp,
    },
    /// High-complexity strings and truth-table embeddings.
    Rkt {
        #[command(subcommand)]
        op: RktOp,
    },
    /// Primes from generator outputs.
    Primes {
        #[command(subcommand)]
        op: PrimesOp,
    },
    /// One CSV row per value of a single ranged parameter.
    Sweep(SweepArgs),
    /// Print the machine-model manifest.
    Manifest,
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum MeasureArg {
    Kt,
    Rkt,
    RktPoly,
}

#[derive(Subcommand)]
enum KolmoOp {
    Measure {
        #[arg(long)]
        x: Option<String>,
        #[arg(long, value_enum)]
        measure: Option<MeasureArg>,
        /// Time bound for rkt-poly; defaults to the budget's largest.
        #[arg(long)]
        t: Option<u64>,
        /// Success threshold as p/q.
        #[arg(long)]
        delta: Option<String>,
    },
    Census {
        #[arg(long)]
        m: Option<usize>,
    },
    Promise {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CappMode {
    Exact,
    Sample,
    Prg,
}

#[derive(Args)]
struct CappArgs {
    #[arg(value_enum)]
    mode: CappMode,
    /// Netlist file.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long)]
    samples: Option<u64>,
    /// Generator: `identity`, inline JSON, or a JSON file.
    #[arg(long)]
    gen: Option<String>,
    /// Instance index; defaults to the least n whose bounds admit the circuit.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: Option<u32>,
}

#[derive(Subcommand)]
enum PrgOp {
    Gen {
        /// Generator file: {ell, k, m, alpha, hard_fn}.
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        seed_bits: Option<String>,
    },
    Advantage {
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long)]
        samples: Option<u64>,
    },
    Predict {
        #[arg(long)]
        gen: Option<String>,
        #[arg(long)]
        circuit: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DiagOp {
    Decide {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        i: Option<u64>,
        /// Decide this raw string instead of the padded index.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        gen: Option<String>,
    },
    Verify {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        i: Option<u64>,
        #[arg(long)]
        gen: Option<String>,
    },
    Sweep {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        /// Machine indices, e.g. `0..8`.
        #[arg(long)]
        i: Option<String>,
        #[arg(long)]
        gen: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GapModeArg {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum RktOp {
    Construct {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, value_enum)]
        mode: Option<GapModeArg>,
        /// Repetitions in Monte Carlo mode (odd).
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        gen: Option<String>,
    },
    Embed {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        tn: Option<u64>,
        /// The string to embed; defaults to the first one of complexity at least half its length.
        #[arg(long)]
        prefix: Option<String>,
    },
    Extract {
        #[command(flatten)]
        decider: DeciderArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    Fact51 {
        #[command(flatten)]
        decider: DeciderArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
    },
}

#[derive(Args)]
struct DeciderArgs {
    /// Decider bytecode in hex; defaults to the copy loop.
    #[arg(long)]
    program: Option<String>,
    #[arg(long)]
    advice: Option<String>,
    #[arg(long)]
    time: Option<u64>,
}

#[derive(Subcommand)]
enum PrimesOp {
    Find {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        gen: Option<String>,
    },
    Rate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        gen: Option<String>,
    },
    Witness {
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepTarget {
    DiagVerify,
    Fact51,
    PrimesFind,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    target: SweepTarget,
    /// `key=value`, where exactly one value is a range (`a..b`, `a..=b`, or `a,b,c`).
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long)]
    gen: Option<String>,
}

enum Output {
    Json(Value),
    Csv(String),
}

struct Ctx {
    params: Params,
    seed: u64,
}

impl Ctx {
    fn sampler(&self, id: &str, n: u64) -> SeededSampler {
        SeededSampler::new(id, n, 0, self.seed)
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))
}

fn load_circuit(ctx: &mut Ctx, flag: Option<PathBuf>) -> Result<Circuit> {
    let path: PathBuf = ctx.params.need("circuit", flag)?;
    let text = read_file(&path)?;
    ctx.params.record("circuit_netlist", &text);
    Circuit::from_netlist(&text)
}

fn gen_config(ctx: &mut Ctx, flag: Option<String>) -> Result<GenConfig> {
    let spec: String = ctx.params.get("gen", flag, "identity".to_string())?;
    let g = match spec.trim() {
        "identity" => GenConfig::Identity,
        s if s.starts_with('{') => GenConfig::from_json(s)?,
        path => GenConfig::from_json(&read_file(Path::new(path))?)?,
    };
    ctx.params.record("gen_resolved", &g);
    Ok(g)
}

/// Generator file for the `prg` commands.
#[derive(Deserialize, serde::Serialize)]
struct GeneratorFile {
    ell: usize,
    k: usize,
    m: usize,
    alpha: usize,
    /// Hex truth table (most significant bit first) or `lk-surrogate`.
    #[serde(default = "lk_name")]
    hard_fn: String,
}

fn lk_name() -> String {
    "lk-surrogate".into()
}

fn hex_table(hex_str: &str, k: usize) -> Result<Bits> {
    let bytes = hex::decode(hex_str).map_err(|e| LabError::Parse(format!("hard_fn hex: {e}")))?;
    let bits: Bits = bytes
        .iter()
        .flat_map(|b| (0..8).rev().map(move |i| b >> i & 1 == 1))
        .collect();
    if bits.len() < 1 << k {
        return Err(LabError::InputShape(format!(
            "hard_fn holds {} bits, need {}",
            bits.len(),
            1 << k
        )));
    }
    Ok(bits[..1 << k].to_vec())
}

fn load_generator(ctx: &mut Ctx, flag: Option<String>) -> Result<Prg> {
    let spec: String = ctx.params.need("gen", flag)?;
    let text = if spec.trim_start().starts_with('{') {
        spec
    } else {
        read_file(Path::new(&spec))?
    };
    let f: GeneratorFile =
        serde_json::from_str(&text).map_err(|e| LabError::Parse(format!("generator file: {e}")))?;
    ctx.params.record("generator", &f);
    let table = match f.hard_fn.as_str() {
        "lk-surrogate" => lk_hard_table(f.k)?,
        h => hex_table(h, f.k)?,
    };
    Ok(Prg::Nw(NWGenerator::new(
        build_design(f.ell, f.k, f.m, f.alpha)?,
        table,
    )?))
}

fn decider(ctx: &mut Ctx, a: DeciderArgs, n: usize) -> Result<DeciderSpec> {
    let hex_code: String = ctx
        .params
        .get("program", a.program, copy_printer().to_hex())?;
    let advice: String = ctx.params.get("advice", a.advice, String::new())?;
    let time: u64 = ctx.params.get("time", a.time, 4 * n as u64 + 2)?;
    Ok(DeciderSpec {
        program: ToyProgram::from_hex(&hex_code)?,
        advice: parse_bits(&advice)?,
        time,
    })
}

fn parse_delta(s: &str) -> Result<(u64, u64)> {
    let bad = || LabError::Parse(format!("delta {s:?} is not p/q"));
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    Ok((
        p.trim().parse().map_err(|_| bad())?,
        q.trim().parse().map_err(|_| bad())?,
    ))
}

fn estimate_json(inst: &CappInstance, est: &CappEstimate) -> Value {
    json!({
        "mu_num": est.mu.num,
        "mu_logden": est.mu.logden,
        "mu": est.mu.to_f64(),
        "mode": est.mode,
        "canonical": est.canonical,
        "success": capp_success(inst, est),
    })
}

/// The least n (at least the arity) whose n^d bounds admit the circuit.
fn fitting_instance(c: Circuit, d: u32) -> Result<CappInstance> {
    let mut n = c.input_arity().max(2) as u64;
    loop {
        match CappInstance::new(n, d, c.clone()) {
            Ok(i) => return Ok(i),
            Err(_) if n < 1 << 20 => n += 1,
            Err(e) => return Err(e),
        }
    }
}

fn run_kolmo(ctx: &mut Ctx, op: KolmoOp) -> Result<(String, Output)> {
    let b = ComplexityBudget::default();
    match op {
        KolmoOp::Measure {
            x,
            measure,
            t,
            delta,
        } => {
            let x = parse_bits(&ctx.params.need::<String>("x", x)?)?;
            let measure = ctx.params.get("measure", measure, MeasureArg::Rkt)?;
            let (p, q) = parse_delta(&ctx.params.get("delta", delta, "2/3".to_string())?)?;
            let b = b.with_delta(p, q);
            b.validate()?;
            let rep = match measure {
                MeasureArg::Kt => kt(&x, &b)?,
                MeasureArg::Rkt => rkt(&x, &b)?,
                MeasureArg::RktPoly => rk_t(&x, ctx.params.get("t", t, b.max_t())?, &b)?,
            };
            let norm = normalized(rep.value);
            Ok((
                "kolmo measure".into(),
                Output::Json(json!({ "report": rep, "normalized": norm })),
            ))
        }
        KolmoOp::Census { m } => {
            let m = ctx.params.get("m", m, 8usize)?;
            Ok((
                "kolmo census".into(),
                Output::Csv(rkt_census(m, &b)?.to_csv()),
            ))
        }
        KolmoOp::Promise { n, eps } => {
            let n = ctx.params.get("n", n, 8usize)?;
            let eps = ctx.params.get("eps", eps, 0.5f64)?;
            let p = promise_instances(n, eps, &b)?;
            let sizes = json!({ "yes": p.yes.len(), "no": p.no.len() });
            Ok((
                "kolmo promise".into(),
                Output::Json(json!({ "sets": p, "sizes": sizes })),
            ))
        }
    }
}

fn run_capp(ctx: &mut Ctx, a: CappArgs) -> Result<(String, Output)> {
    let c = load_circuit(ctx, a.circuit)?;
    let d = ctx.params.get("d", a.d, 2u32)?;
    let inst = match ctx.params.optional("n", a.n)? {
        Some(n) => CappInstance::new(n, d, c)?,
        None => fitting_instance(c, d)?,
    };
    let (name, est) = match a.mode {
        CappMode::Exact => ("capp exact", capp_exact(&inst)?),
        CappMode::Sample => {
            let s = ctx.params.get("samples", a.samples, 100_000u64)?;
            (
                "capp sample",
                capp_sample(&inst, s, &ctx.sampler("capp-sample", inst.n))?,
            )
        }
        CappMode::Prg => {
            let g = gen_config(ctx, a.gen)?;
            (
                "capp prg",
                capp_pseudodet(&inst, &g, &ctx.sampler("capp-prg", inst.n), 0)?,
            )
        }
    };
    let mut v = estimate_json(&inst, &est);
    v["n"] = json!(inst.n);
    Ok((name.into(), Output::Json(v)))
}

fn run_prg(ctx: &mut Ctx, op: PrgOp) -> Result<(String, Output)> {
    match op {
        PrgOp::Gen { gen, seed_bits } => {
            let g = load_generator(ctx, gen)?;
            let z = parse_bits(&ctx.params.need::<String>("seed_bits", seed_bits)?)?;
            let out = g.generate(&z)?;
            Ok((
                "prg gen".into(),
                Output::Json(json!({ "seed": fmt_bits(&z), "output": fmt_bits(&out) })),
            ))
        }
        PrgOp::Advantage {
            gen,
            circuit,
            samples,
        } => {
            let g = load_generator(ctx, gen)?;
            let d = load_circuit(ctx, circuit)?;
            let exact_ok =
                g.seed_len() <= EXACT_ADVANTAGE_CAP && g.output_len() <= EXACT_ADVANTAGE_CAP;
            let rep = match ctx.params.optional("samples", samples)? {
                None if exact_ok => advantage_exact(&d, &g)?,
                s => advantage_sample(
                    &d,
                    &g,
                    s.unwrap_or(100_000),
                    &ctx.sampler("prg-advantage", 0),
                )?,
            };
            Ok((
                "prg advantage".into(),
                Output::Json(serde_json::to_value(rep).unwrap()),
            ))
        }
        PrgOp::Predict { gen, circuit } => {
            let g = load_generator(ctx, gen)?;
            let d = load_circuit(ctx, circuit)?;
            let v = match hybrid_predictor(&d, &g)? {
                None => json!({ "predictor": null }),
                Some(p) => json!({
                    "position": p.position,
                    "advantage": p.advantage,
                    "advantage_num": p.advantage_exact.0,
                    "advantage_logden": p.advantage_exact.1,
                    "total_advantage": p.total_advantage,
                    "hybrids": p.hybrids,
                    "predictor": p.predictor.to_netlist(),
                }),
            };
            Ok(("prg predict".into(), Output::Json(v)))
        }
    }
}

fn verify_rows(ctx: &Ctx, n: usize, d: u32, idx: &[u64], g: &GenConfig) -> Result<Vec<DiagReport>> {
    idx.iter()
        .map(|&i| diag_verify(i, n, g, d, &ctx.sampler("diag-verify", n as u64)))
        .collect()
}

fn run_diag(ctx: &mut Ctx, op: DiagOp) -> Result<(String, Output)> {
    match op {
        DiagOp::Decide { n, d, i, x, gen } => {
            let d = ctx.params.get("d", d, 2u32)?;
            let g = gen_config(ctx, gen)?;
            let bits = match ctx.params.optional::<String>("x", x)? {
                Some(s) => parse_bits(&s)?,
                None => {
                    let n = ctx.params.get("n", n, 32usize)?;
                    DiagInput::new(n, ctx.params.get("i", i, 0u64)?)?.to_bits()
                }
            };
            let decision =
                diag_decide(&bits, &g, d, &ctx.sampler("diag-decide", bits.len() as u64))?;
            let parsed = DiagInput::parse(&bits).map(|p| p.i);
            Ok((
                "diag decide".into(),
                Output::Json(
                    json!({ "x": fmt_bits(&bits), "index": parsed, "decision": decision }),
                ),
            ))
        }
        DiagOp::Verify { n, d, i, gen } => {
            let n = ctx.params.get("n", n, 32usize)?;
            let d = ctx.params.get("d", d, 2u32)?;
            let i = ctx.params.get("i", i, 0u64)?;
            let g = gen_config(ctx, gen)?;
            let r = verify_rows(ctx, n, d, &[i], &g)?.remove(0);
            Ok((
                "diag verify".into(),
                Output::Json(serde_json::to_value(r).unwrap()),
            ))
        }
        DiagOp::Sweep { n, d, i, gen } => {
            let n = ctx.params.get("n", n, 32usize)?;
            let d = ctx.params.get("d", d, 2u32)?;
            let idx = parse_axis(&ctx.params.get("i", i, "0..8".to_string())?)?;
            let g = gen_config(ctx, gen)?;
            Ok((
                "diag sweep".into(),
                Output::Csv(diag_sweep_csv(&verify_rows(ctx, n, d, &idx, &g)?)),
            ))
        }
    }
}

/// The lexicographically first m-bit string whose rkt is at least m/2.
fn default_embed_string(m: usize) -> Result<Bits> {
    let b = ComplexityBudget::default();
    for x in all_strings(m) {
        if 2 * rkt(&x, &b)?.value_or_floor() >= m as u64 {
            return Ok(x);
        }
    }
    Err(LabError::Oracle(format!(
        "no {m}-bit string reaches rkt {m}/2"
    )))
}

fn run_rkt(ctx: &mut Ctx, op: RktOp) -> Result<(String, Output)> {
    match op {
        RktOp::Construct {
            n,
            d,
            mode,
            reps,
            gen,
        } => {
            let n = ctx.params.get("n", n, 16u64)?;
            let d = ctx.params.get("d", d, 2u32)?;
            let mode = match ctx.params.get("mode", mode, GapModeArg::Exact)? {
                GapModeArg::Exact => GapMode::Exact,
                GapModeArg::Mc => GapMode::MonteCarlo {
                    reps: ctx.params.get("reps", reps, 5u32)?,
                },
            };
            let g = gen_config(ctx, gen)?;
            let inst = RndSearchInstance::new(n, d)?;
            let r = construct_high_rkt(
                &inst,
                &g,
                mode,
                &ComplexityBudget::default(),
                &ctx.sampler("rkt-construct", n),
            )?;
            let mut v = serde_json::to_value(&r).unwrap();
            v["m"] = json!(inst.m);
            v["fail"] = json!(r.string.is_none());
            Ok(("rkt construct".into(), Output::Json(v)))
        }
        RktOp::Embed { n, eps, tn, prefix } => {
            let n = ctx.params.get("n", n, 4usize)?;
            let eps = ctx.params.get("eps", eps, 0.5f64)?;
            let tn = ctx.params.get("tn", tn, 2u64)?;
            let given = ctx.params.optional::<String>("prefix", prefix)?;
            let mut supplier = |m: usize| match &given {
                Some(s) => parse_bits(s),
                None => default_embed_string(m),
            };
            let t = embed_hard_language(&mut supplier, n, eps, tn)?;
            Ok((
                "rkt embed".into(),
                Output::Json(
                    json!({ "n": t.n, "prefix_len": t.prefix_len, "string": fmt_bits(&t.bits) }),
                ),
            ))
        }
        RktOp::Extract { decider: da, n, m } => {
            let n = ctx.params.get("n", n, 3usize)?;
            let m = ctx.params.get("m", m, 1usize << n)?;
            let dec = decider(ctx, da, n)?;
            let y = extract_string(&|x: &[bool]| dec.decide(x), n, m)?;
            Ok((
                "rkt extract".into(),
                Output::Json(json!({ "n": n, "m": m, "string": fmt_bits(&y) })),
            ))
        }
        RktOp::Fact51 {
            decider: da,
            n,
            ell,
        } => {
            let n = ctx.params.get("n", n, 4usize)?;
            let ell = ctx.params.get("ell", ell, 16usize)?;
            let dec = decider(ctx, da, n)?;
            let w = fact51_witness(&dec, n, ell)?;
            Ok((
                "rkt fact51".into(),
                Output::Json(json!({
                    "program": w.program.to_hex(), "t": w.t, "cost": w.cost, "bound": w.bound, "prefix": w.prefix,
                })),
            ))
        }
    }
}

fn run_primes(ctx: &mut Ctx, op: PrimesOp) -> Result<(String, Output)> {
    match op {
        PrimesOp::Find { n, gen } => {
            let n = ctx.params.get("n", n, 16usize)?;
            let g = gen_config(ctx, gen)?;
            let v = match find_prime_via_prg(&g, n)? {
                Some(p) => {
                    json!({ "found": true, "prime": p.prime, "seed": fmt_bits(&p.seed), "n": n })
                }
                None => json!({ "found": false, "n": n }),
            };
            Ok(("primes find".into(), Output::Json(v)))
        }
        PrimesOp::Rate { n, trials, gen } => {
            let n = ctx.params.get("n", n, 8usize)?;
            let trials = ctx.params.get("trials", trials, 100_000u64)?;
            let g = gen_config(ctx, gen)?;
            let r = random_seed_prime(n, trials, &ctx.sampler("primes-rate", n as u64), &g)?;
            Ok((
                "primes rate".into(),
                Output::Json(serde_json::to_value(r).unwrap()),
            ))
        }
        PrimesOp::Witness { n } => {
            let n = ctx.params.get("n", n, 16usize)?;
            let sp = find_prime_via_prg(&GenConfig::Identity, n)?
                .ok_or_else(|| LabError::Oracle(format!("no {n}-bit prime")))?;
            let w = rk_poly_prime_witness(&sp)?;
            Ok((
                "primes witness".into(),
                Output::Json(json!({
                    "prime": sp.prime, "program": w.program.to_hex(), "aux": fmt_bits(&w.aux),
                    "cost": w.cost, "steps": w.steps, "bound": w.bound,
                })),
            ))
        }
    }
}

fn run_sweep(ctx: &mut Ctx, a: SweepArgs) -> Result<(String, Output)> {
    let (name, defaults): (&str, &[(&str, u64)]) = match a.target {
        SweepTarget::DiagVerify => ("diag-verify", &[("n", 32), ("d", 2), ("i", 0)]),
        SweepTarget::Fact51 => ("fact51", &[("n", 4), ("ell", 16)]),
        SweepTarget::PrimesFind => ("primes-find", &[("n", 16)]),
    };
    let mut specs: Vec<(String, String)> = defaults
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    for p in &a.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| LabError::Parse(format!("--param {p:?} is not key=value")))?;
        let slot = specs
            .iter_mut()
            .find(|(key, _)| key == k)
            .ok_or_else(|| LabError::Parameter(format!("{name} has no parameter {k}")))?;
        slot.1 = v.to_string();
    }
    let ranged: Vec<&(String, String)> = specs.iter().filter(|(_, v)| is_ranged(v)).collect();
    if ranged.len() != 1 {
        return Err(LabError::Parameter(format!(
            "exactly one ranged parameter allowed, got {}",
            ranged.len()
        )));
    }
    let axis_key = ranged[0].0.clone();
    let axis = parse_axis(&ranged[0].1)?;
    ctx.params.record("target", &name);
    for (k, v) in &specs {
        ctx.params.record(k, v);
    }
    let g = gen_config(ctx, a.gen)?;
    let fixed = |k: &str| -> Result<u64> {
        let v = &specs.iter().find(|(key, _)| key == k).unwrap().1;
        v.parse()
            .map_err(|_| LabError::Parse(format!("{k}={v} is not a number")))
    };
    let value = |k: &str, at: u64| if k == axis_key { Ok(at) } else { fixed(k) };
    let csv = match a.target {
        SweepTarget::DiagVerify => {
            let mut rows = Vec::new();
            for &at in &axis {
                let (n, d, i) = (
                    value("n", at)? as usize,
                    value("d", at)? as u32,
                    value("i", at)?,
                );
                rows.push(diag_verify(
                    i,
                    n,
                    &g,
                    d,
                    &ctx.sampler("diag-verify", n as u64),
                )?);
            }
            diag_sweep_csv(&rows)
        }
        SweepTarget::Fact51 => {
            let mut s = String::from("n,ell,cost,bound\n");
            for &at in &axis {
                let (n, ell) = (value("n", at)? as usize, value("ell", at)? as usize);
                let dec = DeciderSpec {
                    program: copy_printer(),
                    advice: vec![],
                    time: 4 * n as u64 + 2,
                };
                let w = fact51_witness(&dec, n, ell)?;
                s += &format!("{n},{ell},{},{}\n", w.cost, w.bound);
            }
            s
        }
        SweepTarget::PrimesFind => {
            let mut s = String::from("n,prime,seed\n");
            for &at in &axis {
                let n = value("n", at)? as usize;
                match find_prime_via_prg(&g, n)? {
                    Some(p) => s += &format!("{n},{},{}\n", p.prime, fmt_bits(&p.seed)),
                    None => s += &format!("{n},,\n"),
                }
            }
            s
        }
    };
    Ok((format!("sweep {name}"), Output::Csv(csv)))
}

fn dispatch(
    ctx: &mut Ctx,
    command: Command,
    manifest: &MachineManifest,
) -> Result<(String, Output)> {
    match command {
        Command::Kolmo { op } => run_kolmo(ctx, op),
        Command::Capp(a) => run_capp(ctx, a),
        Command::Prg { op } => run_prg(ctx, op),
        Command::Diag { op } => run_diag(ctx, op),
        Command::Rkt { op } => run_rkt(ctx, op),
        Command::Primes { op } => run_primes(ctx, op),
        Command::Sweep(a) => run_sweep(ctx, a),
        Command::Manifest => Ok((
            "manifest".into(),
            Output::Json(serde_json::to_value(manifest).unwrap()),
        )),
    }
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Budget(_) | LabError::DesignStuck { .. } => EXIT_BUDGET,
        LabError::Oracle(_) => EXIT_ASSERTION,
        LabError::InputShape(_) | LabError::Parameter(_) | LabError::Parse(_) => EXIT_USAGE,
    }
}

fn load_manifest() -> Result<MachineManifest> {
    match std::env::var_os(MANIFEST_ENV) {
        Some(p) => MachineManifest::from_json(&read_file(Path::new(&p))?),
        None => Ok(MachineManifest::default()),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let manifest = load_manifest()?;
    let params = match &cli.config {
        Some(p) => Params::load(&read_file(p)?)?,
        None => Params::new(Default::default()),
    };
    let mut ctx = Ctx { params, seed: 0 };
    ctx.seed = ctx.params.get("seed", cli.seed, 0u64)?;
    let workers = match cli.workers {
        Some(w) => w,
        None => ctx.params.get("workers", None, 0usize)?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Parameter(format!("worker pool: {e}")))?;
    let started = Instant::now();
    let (name, output) = pool.install(|| dispatch(&mut ctx, cli.command, &manifest))?;
    let text = match output {
        Output::Csv(s) => s,
        Output::Json(result) => {
            let mut settings = ctx.params.effective().clone();
            settings.remove("workers");
            let report = json!({
                "command": name,
                "config_hash": config_hash(&name, &settings),
                "manifest_version": manifest.version,
                "seed": ctx.seed,
                "settings": settings,
                "result": result,
                "timing_ms": started.elapsed().as_millis() as u64,
            });
            serde_json::to_string_pretty(&report).unwrap() + "\n"
        }
    };
    match &cli.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| LabError::Parse(format!("{}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("derand: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
