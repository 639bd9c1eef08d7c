//! Cross-cutting behavior: gradient flow through long unrolls, incremental
//! evaluation, optimizer trajectories, and checkpoint files on disk.

use autodiff_nn::adam::Adam;
use autodiff_nn::blocks::{EmbeddingTable, GruCell, Linear};
use autodiff_nn::checkpoint::{load_checkpoint, save_checkpoint};
use autodiff_nn::tape::Tape;
use autodiff_nn::tensor::{Grads, Params};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

#[test]
fn a_twelve_step_unroll_carries_gradient_back_to_the_first_input() {
    let mut params = Params::new();
    let mut r = rng(1);
    let cell = GruCell::new(&mut params, "gru", 3, 5, &mut r);
    let mut grads = Grads::zeros_like(&params);
    let mut tape = Tape::new();

    let first = tape.constant(vec![0.3, -0.8, 0.5]);
    let mut h = tape.constant(cell.initial_state());
    h = cell.apply(&mut tape, &params, first, h);
    for t in 1..12 {
        let x = tape.constant(vec![0.1 * t as f64, -0.05 * t as f64, 0.2]);
        h = cell.apply(&mut tape, &params, x, h);
    }
    let out = tape.pick(h, 2);
    let loss = tape.weighted_sum(&[(1.0, out)]);
    tape.backward(&params, loss, &mut grads).unwrap();

    let reach: f64 = tape.grad(first).iter().map(|g| g.abs()).sum();
    assert!(reach > 1e-12, "gradient w.r.t. the first input vanished: {reach}");
}

#[test]
fn stepwise_tapes_match_one_long_tape_bit_for_bit() {
    let mut params = Params::new();
    let mut r = rng(2);
    let cell = GruCell::new(&mut params, "gru", 4, 6, &mut r);
    let inputs: Vec<Vec<f64>> =
        (0..9).map(|_| (0..4).map(|_| 2.0 * r.gen::<f64>() - 1.0).collect()).collect();

    // One tape across the whole sequence.
    let long_final = {
        let mut tape = Tape::new();
        let mut h = tape.constant(cell.initial_state());
        for x in &inputs {
            let xv = tape.constant(x.clone());
            h = cell.apply(&mut tape, &params, xv, h);
        }
        tape.value(h).to_vec()
    };

    // A fresh tape per step, carrying only the hidden values forward — the
    // sampling-time regime.
    let mut carried = cell.initial_state();
    for x in &inputs {
        let mut tape = Tape::new();
        let hv = tape.constant(carried.clone());
        let xv = tape.constant(x.clone());
        let h1 = cell.apply(&mut tape, &params, xv, hv);
        carried = tape.value(h1).to_vec();
    }

    let long_bits: Vec<u64> = long_final.iter().map(|v| v.to_bits()).collect();
    let step_bits: Vec<u64> = carried.iter().map(|v| v.to_bits()).collect();
    assert_eq!(long_bits, step_bits);
}

#[test]
fn ten_optimization_steps_are_reproducible_bit_for_bit() {
    let run = || {
        let mut params = Params::new();
        let mut r = rng(3);
        let emb = EmbeddingTable::new(&mut params, "emb", 3, 4, &mut r);
        let lin = Linear::new(&mut params, "lin", 4, 1, &mut r);
        let mut opt = Adam::new(&params, 0.01);
        let mut grads = Grads::zeros_like(&params);
        for step in 0..10 {
            grads.zero();
            let mut tape = Tape::new();
            let e = emb.lookup(&mut tape, &params, step % 3);
            let y = lin.apply(&mut tape, &params, e);
            let y0 = tape.pick(y, 0);
            let loss = tape.sum_squared_residuals(&[y0], &[1.5]);
            tape.backward(&params, loss, &mut grads).unwrap();
            opt.step(&mut params, &grads);
        }
        params
            .iter()
            .flat_map(|(_, t)| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>())
            .collect::<Vec<u64>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn gradient_descent_on_a_scalar_actually_descends() {
    let mut params = Params::new();
    let mut r = rng(4);
    let lin = Linear::new(&mut params, "lin", 2, 1, &mut r);
    let mut opt = Adam::new(&params, 0.05);
    let mut grads = Grads::zeros_like(&params);
    let mut losses = Vec::new();
    for _ in 0..200 {
        grads.zero();
        let mut tape = Tape::new();
        let x = tape.constant(vec![1.0, -0.5]);
        let y = lin.apply(&mut tape, &params, x);
        let y0 = tape.pick(y, 0);
        let loss = tape.sum_squared_residuals(&[y0], &[2.0]);
        losses.push(tape.scalar(loss));
        tape.backward(&params, loss, &mut grads).unwrap();
        opt.step(&mut params, &grads);
    }
    assert!(losses[0] > 1.0, "loss started at {}", losses[0]);
    assert!(*losses.last().unwrap() < 1e-3, "loss ended at {}", losses.last().unwrap());
}

#[test]
fn checkpoint_files_round_trip_and_resume_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nets.ckpt");

    let mut params = Params::new();
    let mut r = rng(5);
    let emb = EmbeddingTable::new(&mut params, "emb", 4, 3, &mut r);
    let lin = Linear::new(&mut params, "lin", 3, 2, &mut r);
    let mut opt = Adam::new(&params, 0.002);

    // A couple of steps so the optimizer state is nontrivial.
    let mut grads = Grads::zeros_like(&params);
    for _ in 0..3 {
        grads.zero();
        let mut tape = Tape::new();
        let e = emb.lookup(&mut tape, &params, 1);
        let y = lin.apply(&mut tape, &params, e);
        let y0 = tape.pick(y, 0);
        let loss = tape.sum_squared_residuals(&[y0], &[0.25]);
        tape.backward(&params, loss, &mut grads).unwrap();
        opt.step(&mut params, &grads);
    }

    save_checkpoint(&path, 314, &[("nets", &params)], &[("opt", &opt)]).unwrap();
    let data = load_checkpoint(&path).unwrap();
    assert_eq!(data.step, 314);

    // Rebuild the same layout from a different seed, restore, and compare a
    // forward pass bit for bit.
    let mut fresh = Params::new();
    let mut r2 = rng(999);
    let emb2 = EmbeddingTable::new(&mut fresh, "emb", 4, 3, &mut r2);
    let lin2 = Linear::new(&mut fresh, "lin", 3, 2, &mut r2);
    data.restore_params("nets", &mut fresh).unwrap();
    let mut opt2 = Adam::restore(&fresh, data.optimizer("opt").unwrap().clone()).unwrap();

    let forward = |params: &Params, emb: &EmbeddingTable, lin: &Linear| {
        let mut tape = Tape::new();
        let e = emb.lookup(&mut tape, params, 2);
        let y = lin.apply(&mut tape, params, e);
        tape.value(y).iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(forward(&params, &emb, &lin), forward(&fresh, &emb2, &lin2));

    // One more identical update on each copy keeps them in lockstep.
    let step_once = |params: &mut Params,
                     emb: &EmbeddingTable,
                     lin: &Linear,
                     opt: &mut Adam| {
        let mut g = Grads::zeros_like(params);
        let mut tape = Tape::new();
        let e = emb.lookup(&mut tape, params, 0);
        let y = lin.apply(&mut tape, params, e);
        let y0 = tape.pick(y, 1);
        let loss = tape.sum_squared_residuals(&[y0], &[-1.0]);
        tape.backward(params, loss, &mut g).unwrap();
        opt.step(params, &g);
    };
    step_once(&mut params, &emb, &lin, &mut opt);
    step_once(&mut fresh, &emb2, &lin2, &mut opt2);
    assert_eq!(forward(&params, &emb, &lin), forward(&fresh, &emb2, &lin2));

    // Saving the same state twice produces identical bytes.
    let path2 = dir.path().join("nets2.ckpt");
    save_checkpoint(&path2, 314, &[("nets", &fresh)], &[("opt", &opt2)]).unwrap();
    let path3 = dir.path().join("nets3.ckpt");
    save_checkpoint(&path3, 314, &[("nets", &fresh)], &[("opt", &opt2)]).unwrap();
    assert_eq!(std::fs::read(&path2).unwrap(), std::fs::read(&path3).unwrap());
}
