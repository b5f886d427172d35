use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use qrir::adapt::Scheme;
use qrir::bits::hamming_distance;
use qrir::config::Config;
use qrir::experiment::{party_seeds, run_point, PointSpec};
use qrir::metrics::{aggregate, BlockSummary, FrameCsv, SummaryCsv};
use qrir::session::{run_block, Alice, Bob, BlockInput, FrameRecord};
use qrir::simchannel::{generation_time, model_qber, read_qkey, QberProfile};

use crate::{load_pool, summary_path};

type Csv = BufWriter<File>;

fn create(path: &Path) -> Result<Csv> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn point_seed(run_seed: u64, index: usize) -> u64 {
    run_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn report(scheme: Scheme, point: &str, s: &BlockSummary) {
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    eprintln!(
        "{point:>8} {:<13} fer {:.4}  f_ec {}  iterations {}",
        scheme.name(),
        s.fer,
        fmt(s.mean_f_ec),
        fmt(s.mean_iterations)
    );
}

struct Point {
    label: String,
    qber_model: f64,
    spec: PointSpec,
    generation_time_s: f64,
}

fn run_points(config: &Config, points: &[Point], out: &Path) -> Result<()> {
    let pool = load_pool(config)?;
    let mut frames = FrameCsv::new(create(out)?);
    let mut summary = SummaryCsv::new(create(&summary_path(out))?);
    for (i, point) in points.iter().enumerate() {
        for &scheme in &config.run.schemes {
            let session = config.session(scheme, point_seed(config.run.seed, i));
            let run = run_point(&pool, &session, &point.spec, |block| {
                block.iter().try_for_each(|r| frames.write(r))
            })?;
            if run.mismatched > 0 {
                bail!("{} verified frames disagree with Alice's key", run.mismatched);
            }
            let s = aggregate(&run.bob, &config.secret_key, point.generation_time_s)?;
            report(scheme, &point.label, &s);
            summary.write(scheme, &point.label, Some(point.qber_model), &s)?;
        }
        frames.flush()?;
        summary.flush()?;
    }
    Ok(())
}

pub fn qber_sweep(config: &Config, grid: &[f64], out: &Path) -> Result<()> {
    let points: Vec<Point> = grid
        .iter()
        .enumerate()
        .map(|(i, &q)| Point {
            label: format!("{q}"),
            qber_model: q,
            spec: PointSpec {
                frames: config.run.frames_per_point,
                frames_per_block: config.run.frames_per_block,
                channel: config.channel.clone(),
                profile: QberProfile::constant(q),
                channel_seed: point_seed(config.run.seed, i),
            },
            generation_time_s: 0.0,
        })
        .collect();
    run_points(config, &points, out)
}

pub fn loss_sweep(config: &Config, grid: &[f64], out: &Path) -> Result<()> {
    let signal_bits = config.run.frames_per_point * config.frame.subblock_len();
    let points: Vec<Point> = grid
        .iter()
        .enumerate()
        .map(|(i, &loss)| {
            let channel = config.channel.with_loss(loss);
            Point {
                label: format!("{loss}"),
                qber_model: model_qber(&channel).e_mu,
                generation_time_s: generation_time(&channel, signal_bits),
                spec: PointSpec {
                    frames: config.run.frames_per_point,
                    frames_per_block: config.run.frames_per_block,
                    channel,
                    profile: QberProfile::model(),
                    channel_seed: point_seed(config.run.seed, i),
                },
            }
        })
        .collect();
    run_points(config, &points, out)
}

pub fn replay(config: &Config, input: &Path, out: &Path) -> Result<()> {
    let (alice_key, bob_key) = read_qkey(input)?;
    let len = config.frame.subblock_len();
    let n_frames = alice_key.len() / len;
    if n_frames == 0 {
        bail!("{} holds {} bits, fewer than one {len}-bit subblock", input.display(), alice_key.len());
    }
    let pool = load_pool(config)?;
    let mut frames = FrameCsv::new(create(out)?);
    let mut summary = SummaryCsv::new(create(&summary_path(out))?);
    let label = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for &scheme in &config.run.schemes {
        let session = config.session(scheme, config.run.seed);
        let (alice_seed, bob_seed) = party_seeds(session.seed);
        let mut alice = Alice::new(&pool, session.clone(), alice_seed)?;
        let mut bob = Bob::new(&pool, session, bob_seed)?;
        let mut records: Vec<FrameRecord> = Vec::with_capacity(n_frames);
        for (block_id, chunk) in (0..n_frames).collect::<Vec<_>>().chunks(config.run.frames_per_block).enumerate() {
            let cut = |key: &[u8]| chunk.iter().map(|&f| key[f * len..(f + 1) * len].to_vec()).collect::<Vec<_>>();
            let (a, b) = (cut(&alice_key), cut(&bob_key));
            let qbers: Vec<f64> = a.iter().zip(&b).map(|(x, y)| hamming_distance(x, y) as f64 / len as f64).collect();
            let input = |subblocks| BlockInput {
                block_id: block_id as u32,
                subblocks,
                decoy: vec![Vec::new(); chunk.len()],
            };
            let outcome = run_block(&mut alice, &mut bob, input(a.clone()), input(b))?;
            for (i, mut r) in outcome.bob.into_iter().enumerate() {
                if r.verified && outcome.bob_keys[i].as_ref() != Some(&a[i]) {
                    bail!("frame {} verified with a key that differs from Alice's", r.frame_id);
                }
                r.qber_true = Some(qbers[i]);
                frames.write(&r)?;
                records.push(r);
            }
        }
        let s = aggregate(&records, &config.secret_key, 0.0)?;
        report(scheme, &label, &s);
        let mean_true = records.iter().filter_map(|r| r.qber_true).sum::<f64>() / records.len() as f64;
        summary.write(scheme, &label, Some(mean_true), &s)?;
    }
    frames.flush()?;
    summary.flush()?;
    Ok(())
}
