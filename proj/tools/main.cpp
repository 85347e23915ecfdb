#include <CLI11.hpp>
#include <iostream>

#include "roadhawk/cli.hpp"

using namespace roadhawk;

int main(int argc, char** argv) {
    CLI::App app{"roadhawk: tiny grid detector, visual-servo lane follower and "
                 "two-node road-inspection simulator"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    app.add_option("--config", config_path, "run config file (key=value sections)");
    app.add_option("--seed", seed, "run seed")->each([&](const std::string&) { seed_set = true; });
    app.add_option("--out", out_dir, "output directory");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "render a synthetic dataset");
    std::string gen_scene;
    int gen_count = 200;
    int gen_size = 128;
    gen->add_option("--scene", gen_scene, "scene spec file (default: canonical scene)");
    gen->add_option("--count", gen_count, "number of samples");
    gen->add_option("--size", gen_size, "image size in pixels");

    // train
    auto* train = app.add_subcommand("train", "train a detector on a dataset directory");
    std::string train_data, train_variant, train_resume;
    int train_iters = -1, train_input = -1, train_base = -1, train_batch = -1, train_ckpt = -1;
    double train_lr = -1;
    bool full_scale_flag = false, no_augment = false;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--variant", train_variant, "default | improved");
    train->add_option("--resume", train_resume, "checkpoint to resume from");
    train->add_option("--iterations", train_iters, "training iterations");
    train->add_option("--input", train_input, "network input size (multiple of 32)");
    train->add_option("--base-filters", train_base, "width scale (16 = full plan)");
    train->add_option("--batch", train_batch, "batch size");
    train->add_option("--checkpoint-interval", train_ckpt, "iterations between checkpoints");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_flag("--full-scale", full_scale_flag, "use the full-scale training parameters");
    train->add_flag("--no-augment", no_augment, "disable online color augmentation");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate weights on a dataset's validation split");
    std::string eval_weights, eval_data, eval_variant;
    int eval_input = -1, eval_base = -1;
    bool eval_all = false;
    double eval_conf = -1;
    eval->add_option("--weights", eval_weights, "weights file (RHWT)");
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--variant", eval_variant, "default | improved");
    eval->add_option("--input", eval_input, "network input size");
    eval->add_option("--base-filters", eval_base, "width scale");
    eval->add_option("--conf", eval_conf, "operating confidence threshold");
    eval->add_flag("--all", eval_all, "evaluate the whole dataset, not the validation split");

    // simulate
    auto* sim = app.add_subcommand("simulate", "run the two-node closed-loop inspection");
    std::string sim_detector = "oracle", sim_weights, sim_scene, sim_variant;
    double sim_offset = 1.0;
    int sim_max_ticks = 20000, sim_input = -1, sim_base = -1;
    sim->add_option("--detector", sim_detector, "oracle | model");
    sim->add_option("--weights", sim_weights, "weights for the model detector");
    sim->add_option("--scene", sim_scene, "scene spec file (default: canonical scene)");
    sim->add_option("--variant", sim_variant, "default | improved (model detector)");
    sim->add_option("--offset", sim_offset, "initial lateral offset in meters");
    sim->add_option("--max-ticks", sim_max_ticks, "simulation tick limit");
    sim->add_option("--input", sim_input, "network input size (model detector)");
    sim->add_option("--base-filters", sim_base, "width scale (model detector)");
    std::string sim_report_host;
    int sim_report_port = 0;
    sim->add_option("--report-host", sim_report_host, "send reports to this host instead of a file");
    sim->add_option("--report-port", sim_report_port, "report server port");

    // bench
    auto* bench = app.add_subcommand("bench", "forward+decode latency statistics");
    std::string bench_variant, bench_weights;
    int bench_reps = 30, bench_input = -1, bench_base = -1, bench_images = 4;
    bench->add_option("--variant", bench_variant, "default | improved");
    bench->add_option("--weights", bench_weights, "weights file");
    bench->add_option("--reps", bench_reps, "repetitions");
    bench->add_option("--input", bench_input, "network input size");
    bench->add_option("--base-filters", bench_base, "width scale");
    bench->add_option("--images", bench_images, "number of random probe images");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_run_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (gen->parsed()) {
            const SceneSpec scene =
                gen_scene.empty() ? canonical_inspection_scene() : load_scene_spec(gen_scene);
            GenDataResult r = cmd_gen_data(scene, gen_count, cfg.out_dir, cfg.seed, gen_size);
            std::cout << "wrote " << r.count << " samples, manifest " << r.manifest_path << "\n";
            return 0;
        }

        if (train->parsed()) {
            if (full_scale_flag) cfg.full_scale();
            if (!train_variant.empty()) cfg.variant = parse_variant(train_variant);
            if (train_iters > 0) cfg.train.iterations = train_iters;
            if (train_input > 0) cfg.train.input_size = train_input;
            if (train_base > 0) cfg.base_filters = train_base;
            if (train_batch > 0) cfg.train.batch_size = train_batch;
            if (train_ckpt > 0) cfg.checkpoint_interval = train_ckpt;
            if (train_lr > 0) cfg.train.learning_rate = train_lr;
            if (no_augment) cfg.augment_online = false;
            CmdTrainResult r = cmd_train(cfg, train_data, train_resume, &std::cerr);
            std::cout << "initial loss " << r.train.initial_loss << ", final loss "
                      << r.train.final_loss << "\n";
            if (!r.train.best_path.empty())
                std::cout << "best checkpoint: " << r.train.best_path << " (val mAP "
                          << r.train.checkpoints[r.train.best_checkpoint].val_map_pct << ")\n";
            return 0;
        }

        if (eval->parsed()) {
            if (!eval_variant.empty()) cfg.variant = parse_variant(eval_variant);
            if (eval_input > 0) cfg.train.input_size = eval_input;
            if (eval_base > 0) cfg.base_filters = eval_base;
            if (eval_conf >= 0) cfg.conf_thresh = eval_conf;
            CmdEvalResult r = cmd_eval(cfg, eval_weights, eval_data, eval_all, nullptr);
            std::cout << format_report_table(r.report, "eval");
            std::cout << "report: " << r.table_path << "\n";
            return 0;
        }

        if (sim->parsed()) {
            if (!sim_scene.empty()) cfg.scene_path = sim_scene;
            if (!sim_variant.empty()) cfg.variant = parse_variant(sim_variant);
            if (sim_input > 0) cfg.train.input_size = sim_input;
            if (sim_base > 0) cfg.base_filters = sim_base;
            CmdSimulateResult r = cmd_simulate(cfg, sim_detector, sim_weights, sim_offset,
                                               sim_max_ticks, &std::cerr, sim_report_host,
                                               static_cast<uint16_t>(sim_report_port));
            std::cout << "reports: " << r.sim.reports_accepted << " -> "
                      << (r.report_path.empty() ? "socket" : r.report_path) << "\n";
            std::cout << "trajectory: " << r.trajectory_path << "\n";
            return r.sim.landed ? 0 : 2;
        }

        if (bench->parsed()) {
            if (!bench_variant.empty()) cfg.variant = parse_variant(bench_variant);
            if (bench_input > 0) cfg.train.input_size = bench_input;
            if (bench_base > 0) cfg.base_filters = bench_base;
            CmdBenchResult r = cmd_bench(cfg, bench_weights, bench_reps, bench_images, &std::cout);
            std::cout << "bench log: " << r.path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
