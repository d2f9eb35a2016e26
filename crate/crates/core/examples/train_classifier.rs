//! Trains both linear classifiers on two Gaussian blobs, saves one to the
//! binary model format and reloads it.
//!
//!     cargo run --example train_classifier

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tfcr::classify::{train, ClassifierKind, LinearModel, TrainConfig};

fn main() -> tfcr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..200 {
        let y = i % 2;
        let centre = if y == 0 { -1.0 } else { 1.0 };
        xs.push(vec![centre + rng.gen_range(-0.8..0.8), rng.gen_range(-1.0..1.0)]);
        ys.push(y);
    }
    let config = TrainConfig::default();

    for kind in ClassifierKind::ALL {
        let model = train(kind, &xs, &ys, 2, &config)?;
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| model.predict(x).map(|p| p.label == y).unwrap_or(false))
            .count();
        println!("{:<6} training accuracy {}/200, w = {:?}", kind.name(), correct, model.params.weights);
    }

    let model = train(ClassifierKind::LogReg, &xs, &ys, 2, &config)?;
    let mut bytes = Vec::new();
    model.write_to(&mut bytes).expect("writing to a Vec");
    let back = LinearModel::read_from(&mut bytes.as_slice())?;
    println!("saved {} bytes; reloaded weights equal: {}", bytes.len(), back.params == model.params);
    println!("p(class 1 | x = [0.5, 0]) = {:.3}", back.predict(&[0.5, 0.0])?.scores[1]);
    Ok(())
}
