//! Writes a small model in all three embedding formats, reads each back and
//! looks a word up with and without the lowercase fallback.
//!
//!     cargo run --example load_embeddings

use tfcr::embeddings::{
    load_auto, synthetic_model, write_glove_text, write_word2vec_binary, write_word2vec_text,
    LookupConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = synthetic_model(&["paris", "london", "berlin"], 4, 42);
    let dir = std::env::temp_dir().join("tfcr-load-embeddings");
    std::fs::create_dir_all(&dir)?;

    let mut glove = Vec::new();
    write_glove_text(&model, &mut glove)?;
    let mut text = Vec::new();
    write_word2vec_text(&model, &mut text)?;
    let mut bin = Vec::new();
    write_word2vec_binary(&model, &mut bin)?;

    for (name, bytes) in [("vectors.txt", glove), ("vectors.vec", text), ("vectors.bin", bin)] {
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        let loaded = load_auto(&path)?;
        println!(
            "{name}: {} words, dim {}, paris[0] = {:.6}",
            loaded.len(),
            loaded.dim(),
            loaded.get("paris").unwrap()[0]
        );
    }

    let strict = LookupConfig { case_fallback: false };
    let loose = LookupConfig { case_fallback: true };
    println!(
        "'Paris' strict: {}, with fallback: {}",
        model.lookup("Paris", &strict).is_some(),
        model.lookup("Paris", &loose).is_some()
    );
    Ok(())
}
