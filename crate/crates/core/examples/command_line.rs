//! Drive the command-line front end in-process: generate, detect, refine and replay.

use qicd::cli::main_with_args;

fn main() {
    let dir = std::env::temp_dir().join("qicd-cli-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (graph, part, best) = (path("ring.el"), path("ring.csv"), path("ring.qicd.csv"));

    let steps: Vec<Vec<&str>> = vec![
        vec!["qicd", "generate", "clique-ring", "--cliques", "8", "--size", "6", "--out", &graph],
        vec!["qicd", "detect", "--graph", &graph, "--method", "leiden", "--out", &part],
        vec!["qicd", "qicd", "--graph", &graph, "--kind", "haar-hu", "--seed", "3", "--out", &best],
    ];
    for args in steps {
        let code = main_with_args(args);
        assert_eq!(code, 0);
    }
    let manifest = path("ring.qicd.manifest.json");
    assert_eq!(main_with_args(["qicd", "--from-manifest", manifest.as_str()]), 0);
    println!("outputs in {}", dir.display());
}
