use corrnet::ingest::compute_returns;
use corrnet::netfilter::GraphKind;
use corrnet::persistence::SimilarityMeasure;
use corrnet::synth::regime_switch_benchmark;
use corrnet::volratio::{build_signal_series, SignalParams};

fn main() {
    let table = regime_switch_benchmark(42);
    let ret = compute_returns(&table);
    let params = SignalParams { theta: 250, lookback: 10, d_t: 5, theta_forward: 250, smoothing_divisor: 3.0 };
    let series = build_signal_series(&ret, &params, GraphKind::Pmfg, SimilarityMeasure::EdgeSurvival).unwrap();
    // print profile: decision day, es, q averaged in buckets of 10 windows
    let pts = &series.points;
    for chunk in pts.chunks(20) {
        let t0 = chunk[0].window_start + 250;
        let es: f64 = chunk.iter().map(|p| p.es).sum::<f64>() / chunk.len() as f64;
        let q: f64 = chunk.iter().map(|p| p.q).sum::<f64>() / chunk.len() as f64;
        println!("t={t0:5}  es={es:.3}  q={q:.3}");
    }
}
