#include <tn2v/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace tn2v;
    CLI::App app{"Topological node2vec: graph embeddings with a persistent-homology loss"};
    app.require_subcommand(1);

    cli::GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic point cloud and its reciprocal-distance graph");
    g->add_option("spec", gen.spec, "Generator spec (JSON)")->required()->check(CLI::ExistingFile);
    g->add_option("-o,--output-dir", gen.out_dir, "Directory for points.csv and graph.tsv");

    cli::PdArgs pd;
    std::string pd_format;
    auto* p = app.add_subcommand("pd", "Persistence diagram of a point cloud or weighted graph");
    p->add_option("input", pd.input, "Point-cloud CSV, edge list or weight-matrix CSV")->required()->check(CLI::ExistingFile);
    p->add_option("--format", pd_format, "points | edges | matrix (default: by extension)");
    p->add_option("--max-dim", pd.max_dim, "Highest homology dimension");
    p->add_option("--nu", pd.filtration.nu, "Filtration exponent for graph input");
    p->add_option("--gamma", pd.filtration.gamma, "Filtration offset for graph input");
    p->add_option("-o,--output", pd.output, "Diagram CSV (default: stdout)");

    cli::CompareArgs cmp;
    double cmp_eps = 0.0;
    auto* c = app.add_subcommand("compare", "Exact and entropic diagram distances");
    c->add_option("a", cmp.a, "First diagram CSV")->required()->check(CLI::ExistingFile);
    c->add_option("b", cmp.b, "Second diagram CSV (reference)")->required()->check(CLI::ExistingFile);
    c->add_option("--dim", cmp.dim, "Homology dimension to compare");
    auto* eps_opt = c->add_option("--epsilon", cmp_eps, "Entropic regularization (default from the reference)");
    c->add_option("-o,--output", cmp.output, "Report JSON (default: stdout)");

    cli::TrainArgs tr;
    std::string out_dir;
    int epochs = 0, ckpt = 0;
    double eta = 0.0, l0 = 0.0, l1 = 0.0;
    std::uint64_t seed = 0;
    auto* t = app.add_subcommand("train", "Train an embedding from a run config");
    t->add_option("config", tr.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    auto* o_out = t->add_option("-o,--output-dir", out_dir, "Override output_dir");
    auto* o_ep = t->add_option("--epochs", epochs, "Override train.epochs");
    auto* o_eta = t->add_option("--eta", eta, "Override train.eta");
    auto* o_l0 = t->add_option("--lambda0", l0, "Override train.lambda0");
    auto* o_l1 = t->add_option("--lambda1", l1, "Override train.lambda1");
    auto* o_seed = t->add_option("--seed", seed, "Override model.seed");
    auto* o_ck = t->add_option("--checkpoint-every", ckpt, "Override train.checkpoint_every");
    t->add_flag("-q,--quiet", tr.quiet, "No progress lines");

    cli::EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Inscribed-sphere profile of a 3-D embedding");
    e->add_option("embedding", ev.embedding, "Embedding CSV")->required()->check(CLI::ExistingFile);
    e->add_option("--spheres", ev.spheres, "Number of angles");
    e->add_option("--slab", ev.slab_fraction, "Slab width as a fraction of the diameter");
    e->add_option("-o,--output-dir", ev.out_dir, "Directory for profile.csv, pca.csv and summary.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : cli::kUsage;
    }

    try {
        if (*g) return cli::cmd_generate(gen, std::cout, std::cerr);
        if (*p) {
            if (!pd_format.empty()) pd.format = input_format_from_string(pd_format);
            return cli::cmd_pd(pd, std::cout, std::cerr);
        }
        if (*c) {
            if (*eps_opt) cmp.epsilon = cmp_eps;
            return cli::cmd_compare(cmp, std::cout, std::cerr);
        }
        if (*t) {
            if (*o_out) tr.overrides.output_dir = out_dir;
            if (*o_ep) tr.overrides.epochs = epochs;
            if (*o_eta) tr.overrides.eta = eta;
            if (*o_l0) tr.overrides.lambda0 = l0;
            if (*o_l1) tr.overrides.lambda1 = l1;
            if (*o_seed) tr.overrides.seed = seed;
            if (*o_ck) tr.overrides.checkpoint_every = ckpt;
            return cli::cmd_train(tr, std::cout, std::cerr);
        }
        if (*e) return cli::cmd_eval(ev, std::cout, std::cerr);
    } catch (const InvalidInput& err) {
        std::cerr << "error: " << err.what() << '\n';
        return cli::kUsage;
    }
    return cli::kUsage;
}
