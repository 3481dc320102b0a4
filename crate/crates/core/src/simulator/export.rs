use std::io::Write;

use super::episode::Trace;
use super::SimError;
use crate::numfmt::sig;
use crate::strategy_synthesis::GameContext;

/// Writes one row per stage: `t, k_A, k_B, i_A, i_B, j_A, j_B, payoffs,
/// posterior p_t over every joint state, running averages`.
pub fn write_trace_csv<W: Write>(ctx: &GameContext, trace: &Trace, out: W) -> Result<(), SimError> {
    if trace.actions.len() != trace.horizon {
        return Err(SimError::Invalid("trace was run without keeping its path".into()));
    }
    let s = ctx.scenario();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["t", "k_a", "k_b", "i_a", "i_b", "j_a", "j_b", "payoff_a", "payoff_b"].iter().map(|x| x.to_string()).collect();
    for f in 0..ctx.n_joint() {
        let (ka, kb) = ctx.split_state(f);
        header.push(format!("p_{}_{}", s.family_a().states()[ka], s.family_b().states()[kb]));
    }
    header.extend(["avg_a", "avg_b", "avg_total"].iter().map(|x| x.to_string()));
    w.write_record(&header).map_err(io)?;
    let (mut sa, mut sb) = (0.0, 0.0);
    for (i, (a, (pa, pb))) in trace.actions.iter().zip(&trace.payoffs).enumerate() {
        let t = i + 1;
        sa += pa;
        sb += pb;
        let mut row = vec![
            t.to_string(),
            trace.state.0.to_string(),
            trace.state.1.to_string(),
            a.row_a.to_string(),
            a.row_b.to_string(),
            a.col_a.to_string(),
            a.col_b.to_string(),
            sig(*pa),
            sig(*pb),
        ];
        row.extend(trace.posterior_at(t).iter().map(|x| sig(*x)));
        row.extend([sig(sa / t as f64), sig(sb / t as f64), sig((sa + sb) / t as f64)]);
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Io(e.to_string()))?;
    Ok(())
}

fn io(e: csv::Error) -> SimError {
    SimError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::example;
    use crate::simulator::{run_episode, run_episode_with, EpisodeOptions};
    use crate::strategy_synthesis::standard_optimal_profile;

    #[test]
    fn csv_has_one_row_per_stage() {
        let ctx = GameContext::new(&example("example1").unwrap()).unwrap();
        let p = standard_optimal_profile(&ctx);
        let t = run_episode(&ctx, &p, 12, 5).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&ctx, &t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert!(lines[0].starts_with("t,k_a,k_b,i_a,i_b,j_a,j_b,payoff_a,payoff_b,p_"));
        assert!(lines[0].ends_with("avg_a,avg_b,avg_total"));
        assert_eq!(lines[0].split(',').count(), lines[12].split(',').count());
        assert!(lines[1].starts_with("1,"));

        let bare = run_episode_with(&ctx, &p, 12, 5, &EpisodeOptions { deviation: None, keep_path: false }).unwrap();
        assert!(write_trace_csv(&ctx, &bare, Vec::new()).is_err());
    }
}
