use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hexlab_core::agent::{mcts, MctsParams, Network, NetworkConfig};
use hexlab_core::oracle::Solver;
use hexlab_core::probe::{train_probe, ProbeHyper, Split};
use hexlab_core::seed::rng_for;
use hexlab_core::synth::gen_probing_set;
use hexlab_core::concepts::Horizon;
use hexlab_core::{Board, Player};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_filled(size: usize, seed: u64) -> Board {
    let mut rng = rng_for(seed, "bench-board", 0);
    let mut cells: Vec<_> = Board::new(size).coords().collect();
    cells.shuffle(&mut rng);
    let mut b = Board::new(size);
    for (i, c) in cells.into_iter().enumerate() {
        let p = if i % 2 == 0 { Player::Black } else { Player::White };
        b = b.with_stone(c, p).unwrap();
    }
    b
}

fn rules(c: &mut Criterion) {
    let boards: Vec<Board> = (0..64).map(|s| random_filled(9, s)).collect();
    c.bench_function("winner 9x9 filled x64", |b| {
        b.iter(|| boards.iter().map(|x| x.winner()).filter(|o| o.winner() == Some(Player::Black)).count())
    });
}

fn solver(c: &mut Criterion) {
    let empty = Board::new(4);
    c.bench_function("solve empty 4x4 (cold table)", |b| {
        b.iter(|| Solver::new(4).winner(black_box(&empty), Player::Black).unwrap())
    });
}

fn network(c: &mut Criterion) {
    let net = Network::<f32>::init(&NetworkConfig::default()).unwrap();
    let board = Board::new(5);
    let fv = board.encode().unwrap();
    c.bench_function("forward 5x5 L4 W128", |b| b.iter(|| net.forward(black_box(&fv)).unwrap()));
    c.bench_function("mcts 5x5 budget 64", |b| {
        b.iter(|| mcts(&net, black_box(&board), 64, &MctsParams::default(), None).unwrap())
    });
}

fn probing(c: &mut Criterion) {
    c.bench_function("generate bridge/short x100", |b| {
        b.iter(|| gen_probing_set("bridge", Horizon::Short, 100, 5, 0).unwrap())
    });
    let mut rng = rng_for(0, "bench-probe", 0);
    let x = Array2::from_shape_fn((500, 128), |_| rng.random::<f32>());
    let y: Vec<bool> = (0..500).map(|i| i % 2 == 0).collect();
    let split = Split::stratified(&y, 0.2, 0);
    c.bench_function("probe 500x128", |b| {
        b.iter(|| train_probe(&x.view(), &y, &split, 0, &ProbeHyper::default()).unwrap())
    });
}

criterion_group!(benches, rules, solver, network, probing);
criterion_main!(benches);
