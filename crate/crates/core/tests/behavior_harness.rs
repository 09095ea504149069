use hexlab_core::behavior::{
    near_won_boards, run_negative, run_positive, wasted_move_rate, Agent, BehaviorError, Choice, RandomAgent,
};
use hexlab_core::oracle::{verify_case, Solver};
use hexlab_core::synth::gen_behavioral_cases;
use hexlab_core::Board;

/// Plays the first move the exact solver recommends.
struct Oracle(Solver);

impl Agent for Oracle {
    fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
        let mover = b.to_move()?;
        let best = self.0.best_moves(b, mover)?;
        let moves = b.legal_moves();
        let logits = moves.iter().map(|m| if best.contains(m) { 1.0 } else { 0.0 }).collect();
        Ok(Choice { mv: best[0], moves, logits })
    }
}

#[test]
fn a_perfect_player_passes_every_positive_case() {
    for concept in ["bridge", "crescent", "trapezoid", "span"] {
        for connected in [true, false] {
            let cases = gen_behavioral_cases(concept, 6, 5, 11, connected).unwrap();
            let mut solver = Solver::new(5);
            let mut agent = Oracle(Solver::new(5));
            for c in &cases {
                assert!(verify_case(&mut solver, c).unwrap(), "{}", c.id);
                let r = run_positive(c, &mut agent, &mut solver, 0, "oracle").unwrap();
                assert!(r.passed, "{} ({concept}, connected {connected})", c.id);
                assert_eq!(r.winner, Some(c.attacker));
            }
        }
    }
}

/// Among winning moves, plays one that finishes the game soonest.
struct Fastest(Solver);

impl Agent for Fastest {
    fn choose(&mut self, b: &Board) -> Result<Choice, BehaviorError> {
        let mover = b.to_move()?;
        let mut best = None;
        for m in self.0.best_moves(b, mover)? {
            let (_, plies) = self.0.win_depth(&b.apply_move(mover, m)?, mover.opponent())?;
            if best.is_none_or(|(_, p)| plies < p) {
                best = Some((m, plies));
            }
        }
        let mv = best.expect("winning position has a move").0;
        Ok(Choice { mv, moves: b.legal_moves(), logits: Vec::new() })
    }
}

#[test]
fn only_the_fastest_finisher_wastes_no_moves() {
    let boards = near_won_boards(5, 4, 7, 3).unwrap();
    let rate = wasted_move_rate(&boards, &mut Fastest(Solver::new(5)), &mut Solver::new(5)).unwrap();
    assert_eq!(rate, 0.0);
    // Merely preserving the win still counts as wasted when it is slower.
    let slow = wasted_move_rate(&boards, &mut Oracle(Solver::new(5)), &mut Solver::new(5)).unwrap();
    assert!(slow >= rate);
}

#[test]
fn negative_rollouts_are_deterministic_per_agent_seed() {
    let cases = gen_behavioral_cases("dead", 5, 5, 4, true).unwrap();
    let run = |i: u64| {
        cases
            .iter()
            .map(|c| run_negative(c, &mut RandomAgent::new(9, i), 0, "random").unwrap().passed)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(1));
}
