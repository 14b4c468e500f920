//! Backpropagation against central finite differences on a small network.

use slicenet::ddpg::{Activation, Mlp};
use slicenet::rng::rng_for;

fn main() -> slicenet::Result<()> {
    let mut rng = rng_for(9, &[]);
    let x = [0.3, -0.7, 0.1, 0.9];
    let upstream = [1.0, -0.5];
    for output in [Activation::Tanh, Activation::Identity] {
        let net = Mlp::init(&[4, 8, 4, 2], Activation::Relu, output, 1.0, &mut rng)?;
        let grads = net.backward(&net.forward(&x)?, &upstream)?;
        let f = |n: &Mlp| -> f64 { n.predict(&x).unwrap().iter().zip(&upstream).map(|(y, u)| y * u).sum() };
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..net.params().len() {
            let (mut plus, mut minus) = (net.clone(), net.clone());
            plus.params_mut()[i] += h;
            minus.params_mut()[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an = grads.params[i];
            if fd.abs().max(an.abs()) > 1e-7 {
                worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()));
            }
        }
        println!("{output:?} head: {} parameters, worst relative error {worst:.2e}", net.params().len());
    }
    Ok(())
}
