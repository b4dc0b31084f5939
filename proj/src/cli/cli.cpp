#include "deskstage/cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "deskstage/capture/lights.hpp"
#include "deskstage/capture/plan.hpp"
#include "deskstage/eval/evaluation.hpp"
#include "deskstage/imaging/color.hpp"
#include "deskstage/io/config.hpp"
#include "deskstage/io/dataset.hpp"
#include "deskstage/io/sync.hpp"
#include "deskstage/linear/transport_system.hpp"
#include "deskstage/pairs/pair_miner.hpp"

namespace deskstage::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string dataset;
    std::string target;
    std::string pairs;
    std::string ckpt;
    std::string pattern = "ring";
    std::string model = "neural";
    std::string format = "pfm";
    std::string frames;
    std::string resume;
    double reg = 0.0;
    double cutoff = 1e-4;
    double threshold = pairs::kDefaultIouThreshold;
    double tau = 0.9;
    double inner = 0.3;
    double outer = 0.45;
    int protocol = 1;
    int count = 4;
    long long steps = -1;
    std::optional<std::uint64_t> seed;
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

/// Reproducibility block written next to every output.
void write_repro(const fs::path& path, const std::string& command, const ordered_json& args,
                 const std::optional<io::ProjectConfig>& cfg, std::optional<std::uint64_t> seed) {
    ordered_json j;
    j["tool"] = "deskstage";
    j["version"] = kVersion;
    j["command"] = command;
    j["arguments"] = args;
    j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
    j["config"] = cfg ? ordered_json::parse(io::config_snapshot(*cfg)) : ordered_json(nullptr);
    write_text(path, j.dump(1) + "\n");
}

fs::path repro_beside(const fs::path& out) {
    if (fs::is_directory(out)) return out / "repro.json";
    return fs::path(out.string() + ".repro.json");
}

io::ProjectConfig load_or_default(const std::string& path) {
    return path.empty() ? io::parse_config("") : io::load_config(path);
}

void write_frame_png(const fs::path& path, const imaging::ImageFrame& frame) {
    io::write_png(path, imaging::linear_to_srgb(linear::clamp_for_display(frame)));
}

pairs::PairIndex read_pairs_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read pairs file " + path.string());
    pairs::PairIndex index;
    index.threshold = 0.0;
    std::string line;
    std::getline(in, line);
    if (line.rfind("i,j,iou", 0) != 0) throw std::runtime_error("pairs file lacks the i,j,iou header");
    double min_iou = 1.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        pairs::Pair p;
        char c1 = 0, c2 = 0;
        if (!(row >> p.source >> c1 >> p.target >> c2 >> p.iou) || c1 != ',' || c2 != ',') {
            throw std::runtime_error("malformed pairs row: " + line);
        }
        min_iou = std::min(min_iou, p.iou);
        index.pairs.push_back(p);
    }
    index.threshold = index.pairs.empty() ? pairs::kDefaultIouThreshold : min_iou;
    return index;
}

std::unique_ptr<eval::Relighter> make_model(const Options& o) {
    if (o.model == "copy") return std::make_unique<eval::CopyInputRelighter>();
    if (o.model != "neural") throw std::runtime_error("unknown model '" + o.model + "'");
    if (o.ckpt.empty()) throw std::runtime_error("--ckpt is required for the neural model");
    return std::make_unique<eval::NeuralRelighter>(
        eval::NeuralRelighter::from_checkpoint(autodiff::load_checkpoint(o.ckpt)));
}

int cmd_simulate(const Options& o, std::ostream& out) {
    auto cfg = load_or_default(o.config);
    if (o.seed) {
        cfg.plan.seed = *o.seed;
        cfg.plan.scene.rng_seed = *o.seed;
    }
    auto seq = capture::simulate_plan(cfg.plan, cfg.head());
    if (cfg.plan.sync_frames) {
        std::vector<imaging::ImageFrame> images;
        for (const auto& f : seq.frames) images.push_back(f.image);
        const auto [start, end] = io::sync_detect(images);
        seq.active = {start + 1, end};
    }
    const auto format = o.format == "png" ? io::FrameFormat::kPng : io::FrameFormat::kPfm;
    if (o.format != "png" && o.format != "pfm") throw std::runtime_error("--format must be png or pfm");
    io::write_dataset(seq, o.out, format);
    write_repro(fs::path(o.out) / "repro.json", "simulate", {{"format", o.format}}, cfg, cfg.plan.seed);
    out << "wrote " << seq.size() << " frames to " << o.out << " (active " << seq.active.begin << ".."
        << seq.active.end << ")\n";
    return 0;
}

int cmd_solve_linear(const Options& o, std::ostream& out) {
    const auto seq = io::read_dataset(o.dataset);
    const auto target = imaging::light_from_srgb(io::read_png(o.target), seq.max_radiance);
    const auto indices = seq.training_indices();
    if (indices.empty()) throw std::runtime_error("dataset has no training frames");
    std::vector<imaging::LightFrame> lights;
    std::vector<imaging::ImageFrame> images;
    for (std::size_t i : indices) {
        lights.push_back(seq.frames[i].light);
        images.push_back(seq.frames[i].image);
    }
    const linear::TransportSystem ts(lights, images);
    const auto w = linear::solve_weights(ts, target, {o.reg, o.cutoff});
    const auto relit = linear::relight_linear(ts, w);
    const fs::path out_path(o.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    if (out_path.extension() == ".pfm") {
        io::write_pfm(out_path, relit);
    } else {
        write_frame_png(out_path, relit);
    }
    ordered_json diag;
    diag["residual_norm"] = w.residual_norm;
    diag["effective_rank"] = w.effective_rank;
    diag["weight_norm"] = w.w.norm();
    diag["frames"] = indices.size();
    diag["reg"] = o.reg;
    diag["cutoff"] = o.cutoff;
    write_text(o.out + ".json", diag.dump(1) + "\n");
    write_repro(repro_beside(out_path), "solve-linear",
                {{"dataset", o.dataset}, {"target", o.target}, {"reg", o.reg}, {"cutoff", o.cutoff}}, std::nullopt,
                o.seed);
    out << "rank " << w.effective_rank << ", residual " << w.residual_norm << ", |w| " << w.w.norm() << "\n";
    return 0;
}

int cmd_mine_pairs(const Options& o, std::ostream& out) {
    const auto seq = io::read_dataset(o.dataset);
    const auto indices = seq.training_indices();
    std::vector<imaging::Mask> masks;
    for (std::size_t i : indices) masks.push_back(seq.frames[i].mask);
    const auto index = pairs::mine_pairs(masks, o.threshold, indices);
    std::ostringstream csv;
    csv.precision(17);
    csv << "i,j,iou\n";
    for (const auto& p : index.pairs) csv << p.source << ',' << p.target << ',' << p.iou << '\n';
    write_text(o.out, csv.str());
    write_repro(repro_beside(o.out), "mine-pairs", {{"dataset", o.dataset}, {"threshold", o.threshold}},
                std::nullopt, o.seed);
    out << index.pairs.size() << " ordered pairs at IoU >= " << o.threshold << "\n";
    return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
    auto cfg = load_or_default(o.config);
    if (o.seed) cfg.train.seed = *o.seed;
    if (o.steps >= 0) cfg.train.steps = o.steps;
    cfg.train.validate();
    const auto seq = io::read_dataset(o.dataset);
    const auto index = read_pairs_csv(o.pairs);
    training::TrainOptions options;
    options.out_dir = o.out;
    if (!o.resume.empty()) options.resume = autodiff::load_checkpoint(o.resume);
    const auto session = training::train(seq, index, cfg.train, options);
    write_repro(fs::path(o.out) / "repro.json", "train",
                {{"dataset", o.dataset}, {"pairs", o.pairs}, {"resume", o.resume}}, cfg, cfg.train.seed);
    const auto& last = session.log.empty() ? training::LossReport{} : session.log.back().losses;
    out << "trained to step " << session.step << ", last l1 " << last.l1 << ", total " << last.total_g << "\n";
    return 0;
}

imaging::LightFrame pattern_light(const Options& o, const capture::CaptureSequence& seq) {
    const auto& ref = seq.frames.at(0).light;
    if (o.pattern == "ring" || o.pattern == "ring-light") {
        return capture::ring_light(ref.width(), ref.height(), o.inner, o.outer, seq.max_radiance);
    }
    if (o.pattern == "white") return capture::white_light(ref.width(), ref.height(), seq.max_radiance);
    return imaging::light_from_srgb(io::read_png(o.pattern), seq.max_radiance);
}

int cmd_relight(const Options& o, std::ostream& out) {
    const auto seq = io::read_dataset(o.dataset);
    const auto target = pattern_light(o, seq);
    const auto model = make_model(o);
    const auto relit = eval::relight_sequence(seq, target, *model);
    std::vector<imaging::ImageFrame> inputs;
    for (std::size_t i = seq.active.begin; i < seq.active.end; ++i) inputs.push_back(seq.frames[i].image);
    fs::create_directories(o.out);
    char name[32];
    for (std::size_t k = 0; k < relit.frames.size(); ++k) {
        std::snprintf(name, sizeof(name), "%06zu.png", seq.active.begin + k);
        write_frame_png(fs::path(o.out) / name, relit.frames[k]);
    }
    ordered_json stats;
    stats["frames"] = relit.frames.size();
    stats["input_stability"] = eval::temporal_stability(inputs);
    stats["relit_stability"] = relit.stability;
    write_text(fs::path(o.out) / "stability.json", stats.dump(1) + "\n");
    write_repro(fs::path(o.out) / "repro.json", "relight",
                {{"dataset", o.dataset}, {"ckpt", o.ckpt}, {"pattern", o.pattern}, {"inner", o.inner},
                 {"outer", o.outer}, {"model", o.model}},
                std::nullopt, o.seed);
    out << "relit " << relit.frames.size() << " frames, stability " << relit.stability << " (input "
        << stats["input_stability"].get<double>() << ")\n";
    return 0;
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    const auto seq = io::read_dataset(o.dataset);
    const auto model = make_model(o);
    const eval::PerceptualProxy proxy;
    eval::EvalReport report;
    if (o.protocol == 1) {
        report = eval::eval_protocol1(seq, *model, proxy);
    } else if (o.protocol == 2) {
        std::vector<std::string> hashes;
        if (!o.ckpt.empty()) {
            const auto manifest = nlohmann::json::parse(autodiff::load_checkpoint(o.ckpt).manifest_json);
            hashes = manifest.at("training_frame_hashes").get<std::vector<std::string>>();
        }
        report = eval::eval_protocol2(seq, *model, proxy, hashes);
    } else {
        throw std::runtime_error("--protocol must be 1 or 2");
    }
    write_text(o.out, eval::report_csv(report));
    write_repro(repro_beside(o.out), "evaluate",
                {{"dataset", o.dataset}, {"ckpt", o.ckpt}, {"protocol", o.protocol}, {"model", o.model}},
                std::nullopt, o.seed);
    out << "protocol " << report.protocol << " (" << report.model << "): PSNR " << report.mean_psnr << " dB, RMSE "
        << report.mean_rmse << ", perceptual proxy " << report.mean_perceptual << " over " << report.frames.size()
        << " frames\n";
    return 0;
}

int cmd_sync_detect(const Options& o, std::ostream& out) {
    std::vector<imaging::ImageFrame> images;
    if (!o.dataset.empty()) {
        for (auto& f : io::read_dataset(o.dataset).frames) images.push_back(std::move(f.image));
    } else if (!o.frames.empty()) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(o.frames)) {
            const auto ext = e.path().extension();
            if (ext == ".png" || ext == ".pfm") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            images.push_back(f.extension() == ".pfm" ? io::read_pfm(f) : imaging::srgb_to_linear(io::read_png(f)));
        }
    } else {
        throw CLI::RequiredError("--dataset or --frames");
    }
    const auto [start, end] = io::sync_detect(images, o.tau);
    out << start << ' ' << end << '\n';
    if (!o.out.empty()) {
        ordered_json j;
        j["start"] = start;
        j["end"] = end;
        j["interior"] = {start + 1, end};
        write_text(o.out, j.dump(1) + "\n");
        write_repro(repro_beside(o.out), "sync-detect", {{"dataset", o.dataset}, {"frames", o.frames}, {"tau", o.tau}},
                    std::nullopt, o.seed);
    }
    return 0;
}

int cmd_render_grid(const Options& o, std::ostream& out) {
    const auto seq = io::read_dataset(o.dataset);
    const auto model = make_model(o);
    auto tests = seq.test_indices();
    if (tests.empty()) throw std::runtime_error("dataset has no test range to visualize");
    const auto candidates = seq.training_indices();
    std::vector<imaging::Mask> masks;
    for (std::size_t c : candidates) masks.push_back(seq.frames[c].mask);
    const std::size_t rows = std::min<std::size_t>(tests.size(), static_cast<std::size_t>(std::max(o.count, 1)));
    const int w = seq.frames[0].image.width();
    const int h = seq.frames[0].image.height();
    imaging::ImageFrame grid(3 * w, static_cast<int>(rows) * h);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = tests[r * tests.size() / rows];
        const auto& ref = seq.frames[t];
        const auto match = pairs::nearest_pose_match(ref.mask, masks);
        const auto& src = seq.frames[candidates[match.index]];
        const auto relit = model->relight(src, ref.light);
        const imaging::ImageFrame* panels[3] = {&src.image, &ref.image, &relit};
        for (int p = 0; p < 3; ++p) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    for (int c = 0; c < 3; ++c) grid.at(p * w + x, static_cast<int>(r) * h + y, c) = panels[p]->at(x, y, c);
                }
            }
        }
    }
    const fs::path out_path(o.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_frame_png(out_path, grid);
    write_repro(repro_beside(out_path), "render-grid",
                {{"dataset", o.dataset}, {"ckpt", o.ckpt}, {"count", o.count}, {"model", o.model}}, std::nullopt,
                o.seed);
    out << "wrote " << rows << " rows (input | target | relit) to " << o.out << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Desk-scale monitor light stage toolkit", "deskstage"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1, 1);
    Options o;
    auto seed_opt = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](const std::uint64_t& s) { o.seed = s; }, "Random seed");
    };

    auto* sim = app.add_subcommand("simulate", "Render a synthetic capture into a dataset");
    sim->add_option("--config", o.config, "YAML config file");
    sim->add_option("--out", o.out, "Dataset directory")->required();
    sim->add_option("--format", o.format, "Frame format: pfm or png");
    seed_opt(sim);

    auto* solve = app.add_subcommand("solve-linear", "Linear relighting by light-weight solve");
    solve->add_option("--dataset", o.dataset)->required();
    solve->add_option("--target", o.target, "Target light PNG")->required();
    solve->add_option("--reg", o.reg, "Tikhonov weight");
    solve->add_option("--cutoff", o.cutoff, "Relative singular value cutoff");
    solve->add_option("--out", o.out, "Output image (.png or .pfm)")->required();
    seed_opt(solve);

    auto* mine = app.add_subcommand("mine-pairs", "Mine pose-matched training pairs");
    mine->add_option("--dataset", o.dataset)->required();
    mine->add_option("--threshold", o.threshold, "Mask IoU threshold");
    mine->add_option("--out", o.out, "Pairs CSV")->required();
    seed_opt(mine);

    auto* train = app.add_subcommand("train", "Train the neural relighting model");
    train->add_option("--dataset", o.dataset)->required();
    train->add_option("--pairs", o.pairs)->required();
    train->add_option("--config", o.config, "YAML config file");
    train->add_option("--out", o.out, "Checkpoint directory")->required();
    train->add_option("--steps", o.steps, "Override the configured step count");
    train->add_option("--resume", o.resume, "Checkpoint to continue from");
    seed_opt(train);

    auto* relight = app.add_subcommand("relight", "Relight a whole sequence to one pattern");
    relight->add_option("--pattern", o.pattern, "ring, white, or a light PNG");
    relight->add_option("--inner", o.inner, "Ring inner radius");
    relight->add_option("--outer", o.outer, "Ring outer radius");
    relight->add_option("--ckpt", o.ckpt);
    relight->add_option("--model", o.model, "neural or copy");
    relight->add_option("--dataset", o.dataset)->required();
    relight->add_option("--out", o.out, "Output frame directory")->required();
    seed_opt(relight);

    auto* evaluate = app.add_subcommand("evaluate", "Score a model under protocol 1 or 2");
    evaluate->add_option("--protocol", o.protocol)->check(CLI::IsMember({1, 2}));
    evaluate->add_option("--dataset", o.dataset)->required();
    evaluate->add_option("--ckpt", o.ckpt);
    evaluate->add_option("--model", o.model, "neural or copy");
    evaluate->add_option("--out", o.out, "Report CSV")->required();
    seed_opt(evaluate);

    auto* sync = app.add_subcommand("sync-detect", "Locate the white sync flashes");
    sync->add_option("--dataset", o.dataset);
    sync->add_option("--frames", o.frames, "Folder of PNG/PFM frames");
    sync->add_option("--tau", o.tau, "Threshold fraction of the peak luminance");
    sync->add_option("--out", o.out, "Optional JSON result");
    seed_opt(sync);

    auto* grid = app.add_subcommand("render-grid", "Input / target / relit comparison image");
    grid->add_option("--dataset", o.dataset)->required();
    grid->add_option("--ckpt", o.ckpt);
    grid->add_option("--model", o.model, "neural or copy");
    grid->add_option("--count", o.count, "Number of rows");
    grid->add_option("--out", o.out, "Output PNG")->required();
    seed_opt(grid);

    std::vector<std::string> reversed;
    for (std::size_t i = args.size(); i > 1; --i) reversed.push_back(args[i - 1]);
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*sim) return cmd_simulate(o, out);
        if (*solve) return cmd_solve_linear(o, out);
        if (*mine) return cmd_mine_pairs(o, out);
        if (*train) return cmd_train(o, out);
        if (*relight) return cmd_relight(o, out);
        if (*evaluate) return cmd_evaluate(o, out);
        if (*sync) return cmd_sync_detect(o, out);
        if (*grid) return cmd_render_grid(o, out);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace deskstage::cli
