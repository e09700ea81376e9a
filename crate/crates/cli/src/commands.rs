use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, ensure, Context, Result};

use mqrng_core::adc::{lsb8, AdcConfig};
use mqrng_core::entropy::{assess, worst_case_min_entropy, ConditionalModel, MIN_IID_SAMPLES};
use mqrng_core::extractors::{
    derive_cmac_key, extract_cmac_codes, extract_raw_codes, pack_bits, BitBuf, CmacState,
    TwoSourceExtractor, CODES_PER_INPUT,
};
use mqrng_core::io::{
    decode_bits, decode_codes_file, digest_file, parse_cmac_key, BitWriter, RunConfig, RunManifest,
    SampleHeader, SampleKind, SampleReader,
};
use mqrng_core::pipeline::{
    benchmark_throughput, bits_per_sample, ratio_to_f64, run_pipeline_each, table_rate_models,
    theoretical_rate, ExtractorKind, RateModel, ThroughputReport,
};
use mqrng_core::source::{ChannelModel, ChannelStream};
use mqrng_core::stats::{channel_pair_correlation, run_sts_subset, two_source_strength};

use crate::args::*;
use crate::report::{pass_fail, tsv, Report};

/// Chunk size for streaming sample files; a multiple of both the CMAC
/// block and the two-source input width.
const STREAM_CHUNK: usize = 65_520;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

pub fn run(cmd: &Command) -> Result<Verdict> {
    execute(cmd, None)
}

fn execute(cmd: &Command, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    match cmd {
        Command::Simulate(a) => simulate(cmd, a, snapshot),
        Command::Extract(a) => extract(cmd, a),
        Command::Generate(a) => generate(cmd, a, snapshot),
        Command::Assess(a) => assess_cmd(cmd, a),
        Command::Test(a) => test_cmd(cmd, a),
        Command::Correlate(a) => correlate(cmd, a, snapshot),
        Command::Strength(a) => strength(cmd, a, snapshot),
        Command::Bench(a) => bench(a, snapshot),
        Command::Rates(a) => rates(cmd, a),
        Command::Replay(a) => replay(a),
    }
}

fn resolve_config(src: &SourceArgs, snapshot: Option<&RunConfig>) -> Result<RunConfig> {
    if let Some(s) = snapshot {
        return Ok(s.clone());
    }
    let mut cfg = match &src.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => RunConfig::default_channels(src.channels, src.seed),
    };
    if let Some(k) = src.extractor {
        cfg.pipeline.extractor = k;
    }
    if let Some(w) = src.workers {
        cfg.pipeline.workers = Some(w);
    }
    Ok(cfg.resolved()?)
}

fn sorted_models(cfg: &RunConfig) -> Result<Vec<ChannelModel>> {
    let mut models = cfg.channel_models()?;
    models.sort_by_key(|m| m.channel_id());
    Ok(models)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

/// Command as recorded in a manifest: input paths made absolute.
fn recorded(cmd: &Command) -> Result<toml::Table> {
    let mut cmd = cmd.clone();
    let abs = |p: &mut PathBuf| -> Result<()> {
        *p = fs::canonicalize(&*p).with_context(|| format!("resolving {}", p.display()))?;
        Ok(())
    };
    match &mut cmd {
        Command::Extract(a) => a.inputs.iter_mut().try_for_each(abs)?,
        Command::Assess(a) => abs(&mut a.input)?,
        Command::Test(a) => abs(&mut a.input)?,
        Command::Correlate(a) => a.inputs.iter_mut().try_for_each(abs)?,
        Command::Strength(a) => a.inputs.iter_mut().try_for_each(abs)?,
        _ => {}
    }
    match toml::Value::try_from(&cmd)? {
        toml::Value::Table(t) => Ok(t),
        other => bail!("command serialized to a non-table value {other:?}"),
    }
}

struct ManifestSpec<'a> {
    path: PathBuf,
    cmd: &'a Command,
    config: Option<&'a RunConfig>,
    extractor: Option<ExtractorKind>,
    counts: Vec<(&'a str, u64)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn write_manifest(spec: ManifestSpec<'_>) -> Result<()> {
    let mut m = RunManifest::new(spec.cmd.name());
    if let Some(cfg) = spec.config {
        m = m.with_config(cfg);
    }
    m.extractor = spec.extractor;
    m.args = recorded(spec.cmd)?;
    for (k, v) in spec.counts {
        m.counts.insert(k.to_string(), v);
    }
    for p in &spec.inputs {
        let canon = fs::canonicalize(p)?;
        m.inputs.push(digest_file(p, &canon.display().to_string())?);
    }
    for p in &spec.outputs {
        m.outputs.push(digest_file(p, &file_label(p))?);
    }
    m.write(&spec.path)?;
    Ok(())
}

/// Prints the report and, when requested, writes it plus a manifest.
fn emit(
    report: &Report,
    cmd: &Command,
    out: Option<&Path>,
    extra: Vec<PathBuf>,
    config: Option<&RunConfig>,
    counts: Vec<(&str, u64)>,
    inputs: Vec<PathBuf>,
) -> Result<()> {
    let text = report.to_string();
    print!("{text}");
    if let Some(out) = out {
        create(out)?.write_all(text.as_bytes())?;
        let mut outputs = vec![out.to_path_buf()];
        outputs.extend(extra);
        write_manifest(ManifestSpec {
            path: manifest_path_for(out),
            cmd,
            config,
            extractor: config.map(|c| c.pipeline.extractor),
            counts,
            inputs,
            outputs,
        })?;
    }
    Ok(())
}

fn h_min_bound(model: &ChannelModel, adc: &AdcConfig) -> Result<f64> {
    Ok(worst_case_min_entropy(&ConditionalModel::new(
        model.sigma_q2(),
        model.sigma_e2(),
        *adc,
    )?)?)
}

fn simulate(cmd: &Command, a: &SimulateArgs, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    let cfg = resolve_config(&a.source, snapshot)?;
    let adc = cfg.adc_config()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut outputs = Vec::new();
    let mut report = Report::new("simulate");
    report
        .field("channels", cfg.channels.len())
        .field("samples_per_channel", a.samples)
        .field("adc_bits", adc.bits())
        .field("full_scale", adc.full_scale())
        .field("sample_rate", adc.sample_rate());

    for model in sorted_models(&cfg)? {
        let id = model.channel_id();
        let header = SampleHeader {
            kind: SampleKind::Codes,
            channel_id: id,
            adc_bits: adc.bits(),
            start_index: 0,
            count: a.samples,
        };
        let codes_path = a.out.join(format!("ch{id}.codes"));
        let mut codes = create(&codes_path)?;
        codes.write_all(&header.encode())?;
        let mut analog = if a.analog {
            let p = a.out.join(format!("ch{id}.analog"));
            let mut w = create(&p)?;
            w.write_all(
                &SampleHeader {
                    kind: SampleKind::Analog,
                    adc_bits: 0,
                    ..header
                }
                .encode(),
            )?;
            Some((p, w))
        } else {
            None
        };

        let mut stream = ChannelStream::new(model);
        let mut remaining = a.samples;
        while remaining > 0 {
            let n = remaining.min(STREAM_CHUNK as u64) as usize;
            let block = stream.sample_block(n);
            if let Some((_, w)) = analog.as_mut() {
                block.write_le(&mut *w)?;
            }
            adc.digitize(&block)?.write_le(&mut codes)?;
            remaining -= n as u64;
        }
        codes.flush()?;
        outputs.push(codes_path);
        if let Some((p, mut w)) = analog {
            w.flush()?;
            outputs.push(p);
        }
        report.row(format!(
            "ch{id}\tqcnr_db={:.3}\th_min_bound={:.6}",
            model.qcnr_db()?,
            h_min_bound(&model, &adc)?
        ));
    }

    let manifest = a.out.join("manifest.toml");
    write_manifest(ManifestSpec {
        path: manifest.clone(),
        cmd,
        config: Some(&cfg),
        extractor: None,
        counts: vec![
            ("channels", cfg.channels.len() as u64),
            ("samples_per_channel", a.samples),
        ],
        inputs: vec![],
        outputs: outputs.clone(),
    })?;
    report
        .field("files", outputs.len())
        .field("manifest", manifest.display())
        .verdict(true);
    print!("{report}");
    Ok(Verdict::Pass)
}

fn open_codes(path: &Path) -> Result<SampleReader<BufReader<File>>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let r = SampleReader::new(BufReader::new(f)).with_context(|| path.display().to_string())?;
    ensure!(
        r.header().kind == SampleKind::Codes,
        "{} is an analog file; extraction needs codes",
        path.display()
    );
    Ok(r)
}

fn extract(cmd: &Command, a: &ExtractArgs) -> Result<Verdict> {
    let mut writer = BitWriter::new(create(&a.out)?, a.format)?;
    let mut codes_in = 0u64;
    match a.extractor {
        ExtractorKind::Raw | ExtractorKind::Cmac => {
            ensure!(
                a.inputs.len() == 1,
                "{} extraction takes exactly one codes file, got {}",
                a.extractor,
                a.inputs.len()
            );
            let mut reader = open_codes(&a.inputs[0])?;
            let mut state = if a.extractor == ExtractorKind::Cmac {
                let key = match &a.key {
                    Some(k) => parse_cmac_key(k)?,
                    None => derive_cmac_key(a.seed),
                };
                Some(CmacState::new(key, a.out_bits, a.input_entropy)?)
            } else {
                None
            };
            loop {
                let codes = reader.read_codes(STREAM_CHUNK)?;
                if codes.is_empty() {
                    break;
                }
                codes_in += codes.len() as u64;
                match state.as_mut() {
                    None => writer.write_bytes(&extract_raw_codes(&codes)?)?,
                    Some(s) => {
                        let mut buf = BitBuf::new();
                        for w in extract_cmac_codes(&codes, s)? {
                            buf.push_bits(w, a.out_bits);
                        }
                        writer.write_bits(&buf)?;
                    }
                }
            }
        }
        ExtractorKind::TwoSource => {
            ensure!(
                a.inputs.len() == 2,
                "two-source extraction needs two codes files from different channels, got {}",
                a.inputs.len()
            );
            let mut ra = open_codes(&a.inputs[0])?;
            let mut rb = open_codes(&a.inputs[1])?;
            let ex = TwoSourceExtractor::new(ra.header().channel_id, rb.header().channel_id)?;
            let usable = ra.remaining().min(rb.remaining()) / CODES_PER_INPUT as u64
                * CODES_PER_INPUT as u64;
            let mut left = usable;
            while left > 0 {
                let n = left.min(STREAM_CHUNK as u64) as usize;
                let ca = ra.read_codes(n)?;
                let cb = rb.read_codes(n)?;
                writer.write_bits(&pack_bits(&ex.extract_block(&ca, &cb)?))?;
                left -= n as u64;
            }
            codes_in = 2 * usable;
        }
    }
    let (_, bits) = writer.finish()?;
    write_manifest(ManifestSpec {
        path: manifest_path_for(&a.out),
        cmd,
        config: None,
        extractor: Some(a.extractor),
        counts: vec![("codes_in", codes_in), ("bits_out", bits)],
        inputs: a.inputs.clone(),
        outputs: vec![a.out.clone()],
    })?;
    let mut report = Report::new("extract");
    report
        .field("extractor", a.extractor)
        .field("format", a.format)
        .field("codes_in", codes_in)
        .field("bits_out", bits)
        .field("out", a.out.display())
        .verdict(true);
    print!("{report}");
    Ok(Verdict::Pass)
}

fn throughput_fields(report: &mut Report, t: &ThroughputReport) {
    report
        .field("extractor", t.extractor)
        .field("lanes", t.lanes)
        .field("workers", t.workers)
        .field("rounds", t.rounds)
        .field("samples_consumed", t.samples_consumed)
        .field("total_bits", t.total_bits)
        .field("wall_time_s", format!("{:.3}", t.wall_time.as_secs_f64()))
        .field("measured_bps", format!("{:.6e}", t.measured_bps))
        .field("theoretical_bps", format!("{:.6e}", t.theoretical_bps));
}

fn generate(cmd: &Command, a: &GenerateArgs, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    let cfg = resolve_config(&a.source, snapshot)?;
    let pcfg = cfg.pipeline_config()?;
    let rounds = a.samples.div_ceil(pcfg.block_samples as u64);
    let mut writer = BitWriter::new(create(&a.out)?, a.format)?;
    let t = run_pipeline_each(&pcfg, Some(rounds), |round| Ok(writer.write_bits(round)?))?;
    let (_, bits) = writer.finish()?;
    write_manifest(ManifestSpec {
        path: manifest_path_for(&a.out),
        cmd,
        config: Some(&cfg),
        extractor: Some(pcfg.extractor),
        counts: vec![
            ("rounds", t.rounds),
            ("samples_consumed", t.samples_consumed),
            ("bits_out", bits),
        ],
        inputs: vec![],
        outputs: vec![a.out.clone()],
    })?;
    let mut report = Report::new("generate");
    throughput_fields(&mut report, &t);
    report.field("out", a.out.display()).verdict(true);
    print!("{report}");
    Ok(Verdict::Pass)
}

fn read_bits_file(path: &Path, fmt: mqrng_core::io::InputFormat) -> Result<BitBuf> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_bits(&bytes, fmt).with_context(|| path.display().to_string())
}

fn symbols_of(bits: &BitBuf, width: u32) -> Vec<u8> {
    match width {
        8 => bits.as_bytes()[..(bits.bit_len() / 8) as usize].to_vec(),
        1 => bits.to_bits(),
        w => (0..bits.bit_len() / u64::from(w))
            .map(|i| bits.read_bits(i * u64::from(w), w).expect("in range") as u8)
            .collect(),
    }
}

fn assess_cmd(cmd: &Command, a: &AssessArgs) -> Result<Verdict> {
    let bits = read_bits_file(&a.input, a.input_format)?;
    let symbols = symbols_of(&bits, a.symbol_bits);
    ensure!(
        symbols.len() >= MIN_IID_SAMPLES,
        "assess needs at least {MIN_IID_SAMPLES} symbols, got {}",
        symbols.len()
    );
    let mut rep = assess(&symbols, a.symbol_bits, a.shuffles, a.seed, None)?;
    if let Some(t) = a.threshold {
        rep.min_entropy_threshold = t;
    }
    let mut report = Report::new("assess");
    report
        .field("input", file_label(&a.input))
        .field("symbols", rep.sample_count())
        .field("symbol_bits", rep.symbol_bits)
        .field("p_hat", format!("{:.8}", rep.mcv.p_hat))
        .field("p_upper", format!("{:.8}", rep.mcv.p_upper))
        .field("h_mcv_per_symbol", format!("{:.6}", rep.mcv.min_entropy))
        .field("h_mcv_per_bit", format!("{:.6}", rep.h_mcv_per_bit()))
        .field("h_mcv_per_byte", format!("{:.6}", rep.h_mcv_per_byte()))
        .field("threshold", format!("{:.6}", rep.min_entropy_threshold))
        .field("shuffles", rep.iid.num_shuffles)
        .field("shuffle_seed", rep.iid.seed)
        .field("iid", pass_fail(rep.iid.passed));
    report.row("statistic\toriginal\tgreater\tequal\tresult");
    for s in &rep.iid.statistics {
        report.row(format!(
            "{}\t{:.6}\t{}\t{}\t{}",
            s.name,
            s.original,
            s.greater,
            s.equal,
            pass_fail(s.passed)
        ));
    }
    let pass = rep.passed();
    report.verdict(pass);
    emit(
        &report,
        cmd,
        a.out.as_deref(),
        vec![],
        None,
        vec![("symbols", rep.sample_count() as u64)],
        vec![a.input.clone()],
    )?;
    Ok(Verdict::from_pass(pass))
}

fn test_cmd(cmd: &Command, a: &TestArgs) -> Result<Verdict> {
    let bits = read_bits_file(&a.input, a.input_format)?;
    let rep = run_sts_subset(&bits.to_bits())?;
    let mut report = Report::new("test");
    report
        .field("input", file_label(&a.input))
        .field("bits", rep.bit_count);
    report.row("test\tstatistic\tp_value\tresult");
    for t in &rep.tests {
        report.row(format!(
            "{}\t{:.6}\t{:.6}\t{}",
            t.name,
            t.statistic,
            t.p_value,
            pass_fail(t.passed)
        ));
    }
    report.verdict(rep.passed);
    emit(
        &report,
        cmd,
        a.out.as_deref(),
        vec![],
        None,
        vec![("bits", rep.bit_count as u64)],
        vec![a.input.clone()],
    )?;
    Ok(Verdict::from_pass(rep.passed))
}

fn read_codes_file(path: &Path) -> Result<(u16, Vec<u16>)> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let (h, codes) = decode_codes_file(&bytes).with_context(|| path.display().to_string())?;
    Ok((h.channel_id, codes))
}

fn simulate_codes(model: &ChannelModel, adc: &AdcConfig, n: u64) -> Result<Vec<u16>> {
    let mut stream = ChannelStream::new(*model);
    let mut out = Vec::with_capacity(n as usize);
    let mut left = n;
    while left > 0 {
        let k = left.min(STREAM_CHUNK as u64) as usize;
        out.extend(adc.digitize(&stream.sample_block(k))?.codes);
        left -= k as u64;
    }
    Ok(out)
}

fn lsb_bytes(codes: &[u16]) -> Result<Vec<u8>> {
    Ok(codes
        .iter()
        .map(|&c| lsb8(c))
        .collect::<mqrng_core::Result<_>>()?)
}

fn correlate(cmd: &Command, a: &CorrelateArgs, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    let mut cfg_used = None;
    let mut streams: Vec<(u16, Vec<u8>)> = Vec::new();
    if a.inputs.is_empty() {
        let cfg = resolve_config(&a.source, snapshot)?;
        let adc = cfg.adc_config()?;
        for m in sorted_models(&cfg)? {
            streams.push((
                m.channel_id(),
                lsb_bytes(&simulate_codes(&m, &adc, a.samples)?)?,
            ));
        }
        cfg_used = Some(cfg);
    } else {
        for p in &a.inputs {
            let (id, codes) = read_codes_file(p)?;
            streams.push((id, lsb_bytes(&codes)?));
        }
    }
    ensure!(
        streams.len() >= 2,
        "correlation needs at least two channels"
    );
    let n = streams.iter().map(|(_, s)| s.len()).min().unwrap_or(0);
    let limit = a.limit.unwrap_or(5.0 / (n as f64).sqrt());

    let mut report = Report::new("correlate");
    let mut series_rows = Vec::new();
    let mut overall = 0.0f64;
    report.row("pair\tr_lag0\tmax_abs_r\tlag_at_max\tresult");
    for i in 0..streams.len() {
        for j in i + 1..streams.len() {
            let (ia, sa) = (&streams[i].0, &streams[i].1[..n]);
            let (ib, sb) = (&streams[j].0, &streams[j].1[..n]);
            let rep = channel_pair_correlation(sa, sb, a.max_lag)?;
            let r0 = rep
                .series
                .iter()
                .find(|(l, _)| *l == 0)
                .map_or(f64::NAN, |(_, r)| *r);
            let (lag, r) = rep
                .series
                .iter()
                .copied()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .unwrap_or((0, 0.0));
            overall = overall.max(r.abs());
            report.row(format!(
                "{ia}-{ib}\t{r0:.6e}\t{:.6e}\t{lag}\t{}",
                r.abs(),
                pass_fail(r.abs() < limit)
            ));
            for (l, r) in rep.series {
                series_rows.push(vec![
                    format!("{ia}-{ib}"),
                    l.to_string(),
                    format!("{r:.9e}"),
                ]);
            }
        }
    }
    let pass = overall < limit;
    report
        .field("channels", streams.len())
        .field("n", n)
        .field("max_lag", a.max_lag)
        .field("reference", format!("{:.6e}", 1.0 / (n as f64).sqrt()))
        .field("limit", format!("{limit:.6e}"))
        .field("max_abs_r", format!("{overall:.6e}"))
        .verdict(pass);
    let mut extra = Vec::new();
    if let Some(s) = &a.series {
        create(s)?.write_all(tsv(&["pair", "lag", "r"], series_rows).as_bytes())?;
        extra.push(s.clone());
    }
    emit(
        &report,
        cmd,
        a.out.as_deref(),
        extra,
        cfg_used.as_ref(),
        vec![("n", n as u64)],
        a.inputs.clone(),
    )?;
    Ok(Verdict::from_pass(pass))
}

fn strength(cmd: &Command, a: &StrengthArgs, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    let mut cfg_used = None;
    let (labels, ca, cb) = match a.inputs.len() {
        2 => {
            let (ia, ca) = read_codes_file(&a.inputs[0])?;
            let (ib, cb) = read_codes_file(&a.inputs[1])?;
            TwoSourceExtractor::new(ia, ib)?;
            let n = ca.len().min(cb.len());
            ((ia, ib), ca[..n].to_vec(), cb[..n].to_vec())
        }
        0 => {
            let mut cfg = resolve_config(&a.source, snapshot)?;
            cfg.pipeline.extractor = ExtractorKind::TwoSource;
            let pcfg = cfg.pipeline_config()?;
            let (ia, ib) = pcfg.effective_pairing()[0];
            let adc = cfg.adc_config()?;
            let find = |id: u16| {
                pcfg.channels
                    .iter()
                    .find(|m| m.channel_id() == id)
                    .copied()
                    .expect("pairing validated")
            };
            let n = a.invocations * CODES_PER_INPUT as u64;
            let ca = simulate_codes(&find(ia), &adc, n)?;
            let cb = simulate_codes(&find(ib), &adc, n)?;
            cfg_used = Some(cfg);
            ((ia, ib), ca, cb)
        }
        k => bail!("strength takes two codes files or none, got {k}"),
    };
    let rep = two_source_strength(&ca, &cb)?;
    let n = rep.invocations as f64;
    let bias_limit = 3.0 / n.sqrt();
    let limit = a.limit.unwrap_or(5.0 / n.sqrt());
    let max_abs = rep.correlation.max_abs();
    let pass = rep.bias().abs() < bias_limit && max_abs < limit;
    let mut report = Report::new("strength");
    report
        .field("pair", format!("{}-{}", labels.0, labels.1))
        .field("invocations", rep.invocations)
        .field("p_one", format!("{:.8}", rep.p_one()))
        .field("bias", format!("{:.6e}", rep.bias()))
        .field("bias_limit", format!("{bias_limit:.6e}"))
        .field("reference", format!("{:.6e}", rep.correlation.reference()))
        .field("max_abs_r", format!("{max_abs:.6e}"))
        .field("limit", format!("{limit:.6e}"));
    if let Some((p, r)) = rep.correlation.max_positive {
        report.field("max_positive", format!("{r:.6e} at position {p}"));
    }
    if let Some((p, r)) = rep.correlation.max_negative {
        report.field("max_negative", format!("{r:.6e} at position {p}"));
    }
    report.verdict(pass);
    let mut extra = Vec::new();
    if let Some(s) = &a.series {
        let rows = rep
            .correlation
            .series
            .iter()
            .map(|(p, r)| vec![p.to_string(), format!("{r:.9e}")]);
        create(s)?.write_all(tsv(&["position", "r"], rows).as_bytes())?;
        extra.push(s.clone());
    }
    emit(
        &report,
        cmd,
        a.out.as_deref(),
        extra,
        cfg_used.as_ref(),
        vec![("invocations", rep.invocations as u64)],
        a.inputs.clone(),
    )?;
    Ok(Verdict::from_pass(pass))
}

fn bench(a: &BenchArgs, snapshot: Option<&RunConfig>) -> Result<Verdict> {
    ensure!(
        a.duration.is_finite() && a.duration > 0.0,
        "duration must be a positive number of seconds"
    );
    let cfg = resolve_config(&a.source, snapshot)?;
    let pcfg = cfg.pipeline_config()?;
    let t = benchmark_throughput(&pcfg, Duration::from_secs_f64(a.duration))?;
    let mut report = Report::new("bench");
    throughput_fields(&mut report, &t);
    report
        .field(
            "measured_over_theoretical",
            format!("{:.6e}", t.measured_bps / t.theoretical_bps),
        )
        .verdict(true);
    let text = report.to_string();
    print!("{text}");
    if let Some(out) = &a.out {
        // Timing-dependent, so no manifest.
        create(out)?.write_all(text.as_bytes())?;
    }
    Ok(Verdict::Pass)
}

fn rate_row(kind: ExtractorKind, m: &RateModel) -> String {
    let r = theoretical_rate(m);
    format!(
        "{kind}\t{}\t{}\t{}\t{}\t{:.6e}",
        m.sampling_rate,
        m.n_extractors,
        m.bits_per_sample,
        r,
        ratio_to_f64(r)
    )
}

fn rates(cmd: &Command, a: &RatesArgs) -> Result<Verdict> {
    let mut report = Report::new("rates");
    report.row("extractor\tsampling_rate\textractors\tbits_per_sample\trate_bps\trate_bps_float");
    match (a.sampling_rate, a.extractors, a.extractor) {
        (Some(sr), Some(n), Some(kind)) => {
            ensure!(
                kind != ExtractorKind::Cmac || (1..=128).contains(&a.out_bits),
                "cmac output width must be 1..=128 bits of each 128-bit input"
            );
            let m = RateModel::new(sr, n, bits_per_sample(kind, a.out_bits));
            ensure!(
                m.is_valid(),
                "sampling rate and extractor count must be positive"
            );
            report.row(rate_row(kind, &m));
        }
        _ => {
            for (kind, m) in table_rate_models() {
                report.row(rate_row(kind, &m));
            }
        }
    }
    report.verdict(true);
    emit(&report, cmd, a.out.as_deref(), vec![], None, vec![], vec![])?;
    Ok(Verdict::Pass)
}

fn redirect(path: &mut PathBuf, dir: &Path) {
    *path = dir.join(file_label(path));
}

fn replay(a: &ReplayArgs) -> Result<Verdict> {
    let manifest = RunManifest::load(&a.manifest)
        .with_context(|| format!("loading {}", a.manifest.display()))?;
    let mut cmd: Command = toml::Value::Table(manifest.args.clone())
        .try_into()
        .context("manifest arguments do not describe a command")?;
    ensure!(
        cmd.name() == manifest.command,
        "manifest command {:?} does not match its arguments",
        manifest.command
    );
    for d in &manifest.inputs {
        let now = digest_file(Path::new(&d.path), &d.path)
            .with_context(|| format!("input {} is unavailable", d.path))?;
        ensure!(
            now.sha256 == d.sha256,
            "input {} changed since the run",
            d.path
        );
    }
    let dir = a.out_dir.as_path();
    fs::create_dir_all(dir)?;
    match &mut cmd {
        Command::Simulate(x) => x.out = dir.to_path_buf(),
        Command::Extract(x) => redirect(&mut x.out, dir),
        Command::Generate(x) => redirect(&mut x.out, dir),
        Command::Assess(x) => x.out.iter_mut().for_each(|p| redirect(p, dir)),
        Command::Test(x) => x.out.iter_mut().for_each(|p| redirect(p, dir)),
        Command::Correlate(x) => {
            x.out.iter_mut().for_each(|p| redirect(p, dir));
            x.series.iter_mut().for_each(|p| redirect(p, dir));
        }
        Command::Strength(x) => {
            x.out.iter_mut().for_each(|p| redirect(p, dir));
            x.series.iter_mut().for_each(|p| redirect(p, dir));
        }
        Command::Rates(x) => x.out.iter_mut().for_each(|p| redirect(p, dir)),
        Command::Bench(_) | Command::Replay(_) => {
            bail!("{} runs are not replayable", manifest.command)
        }
    }
    let verdict = execute(&cmd, manifest.config.as_ref())?;

    let mut report = Report::new("replay");
    report
        .field("manifest", a.manifest.display())
        .field("command", &manifest.command)
        .field(
            "replayed_verdict",
            if verdict == Verdict::Pass {
                "PASS"
            } else {
                "FAIL"
            },
        );
    let mut all = true;
    for d in &manifest.outputs {
        let now = digest_file(&dir.join(&d.path), &d.path)?;
        let same = now.sha256 == d.sha256 && now.bytes == d.bytes;
        all &= same;
        report.row(format!("{}\t{}\t{}", d.path, now.sha256, pass_fail(same)));
    }
    report.verdict(all);
    print!("{report}");
    Ok(Verdict::from_pass(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mqrng_core::extractors::CMAC_INPUT_BYTES;

    #[test]
    fn chunk_is_block_aligned() {
        assert_eq!(STREAM_CHUNK % CMAC_INPUT_BYTES, 0);
        assert_eq!(STREAM_CHUNK % CODES_PER_INPUT, 0);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path_for(Path::new("out/x.bits")),
            PathBuf::from("out/x.bits.manifest.toml")
        );
    }

    #[test]
    fn symbol_grouping() {
        let bits = pack_bits(&[1, 0, 1, 1, 0, 0, 1, 0, 1]);
        assert_eq!(symbols_of(&bits, 8), vec![0b1011_0010]);
        assert_eq!(symbols_of(&bits, 1).len(), 9);
        assert_eq!(symbols_of(&bits, 3), vec![0b101, 0b100, 0b101]);
    }
}
