//! Generate an instance, write it with its manifest, and read it back.

use mpga::instance::{load_instance, make_l1sk_instance, manifest, save_instance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inst = make_l1sk_instance(64, 500, 10, 3.0, 200.0, 10, 11)?;
    let dir = std::env::temp_dir().join("mpga-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("l1sk.bin");
    save_instance(&inst, &path)?;
    println!("wrote {}", path.display());
    print!("{}", manifest(&inst));

    let back = load_instance(&path)?;
    assert_eq!(back.a, inst.a);
    assert_eq!(back.b, inst.b);
    assert_eq!(back.x_true, inst.x_true);
    println!("round trip OK, support = {:?}", back.support());
    Ok(())
}
