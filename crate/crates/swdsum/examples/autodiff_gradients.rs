//! Builds a small expression on the tape, runs the backward pass, and
//! cross-checks one gradient against central finite differences.

use swdsum::error::Result;
use swdsum::tensor::{grad_check, Tape, Tensor};

fn main() -> Result<()> {
    // loss = sum(softmax(x · W)) with a fan-out: W also feeds a direct
    // sum term, so its gradient accumulates from two branches.
    let mut tape = Tape::new();
    let x = tape.watch(&Tensor::new(&[1, 3], vec![0.2, -0.1, 0.4])?);
    let w = tape.watch(&Tensor::new(&[3, 2], vec![0.5, -0.3, 0.1, 0.7, -0.2, 0.6])?);
    let logits = tape.matmul(&x, &w)?;
    let probs = tape.softmax_rows(&logits, None)?;
    let spread = tape.mul(&probs, &logits)?;
    let partial = tape.sum(&spread);
    let reg = tape.sum(&w);
    let scaled_reg = tape.scale(&reg, 0.01);
    let loss = tape.add(&partial, &scaled_reg)?;

    let grads = tape.backward(&loss)?;
    println!("loss = {:.6}", loss.item());
    println!("dL/dx = {:?}", grads.get(&x).unwrap());
    println!("dL/dW = {:?}", grads.get(&w).unwrap());

    // The same computation as a function of x alone, for grad_check.
    let w_const = Tensor::new(&[3, 2], vec![0.5, -0.3, 0.1, 0.7, -0.2, 0.6])?;
    let x0 = Tensor::new(&[1, 3], vec![0.2, -0.1, 0.4])?;
    let err = grad_check(
        |tape, x| {
            let logits = tape.matmul(x, &w_const)?;
            let probs = tape.softmax_rows(&logits, None)?;
            let spread = tape.mul(&probs, &logits)?;
            Ok(tape.sum(&spread))
        },
        &x0,
        1e-5,
    )?;
    println!("worst relative error vs finite differences: {err:.2e}");
    assert!(err < 1e-6);
    Ok(())
}
