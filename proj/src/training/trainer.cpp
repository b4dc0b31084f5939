#include "deskstage/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deskstage/autodiff/ops.hpp"
#include "deskstage/capture/renderer.hpp"
#include "deskstage/imaging/hash.hpp"
#include "deskstage/training/losses.hpp"

namespace deskstage::training {

namespace ad = autodiff;

namespace {

constexpr char kFormat[] = "deskstage-model";

void put_adam(ad::Checkpoint& ckpt, const std::string& prefix, const ad::AdamState<float>& s,
              const std::vector<Tensor<float>>& params) {
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        ckpt.entries.push_back(ad::make_entry(prefix + ".m." + std::to_string(i), params[i].shape(), s.m[i]));
        ckpt.entries.push_back(ad::make_entry(prefix + ".v." + std::to_string(i), params[i].shape(), s.v[i]));
    }
}

ad::AdamState<float> get_adam(const ad::Checkpoint& ckpt, const std::string& prefix, std::int64_t step,
                              std::size_t count) {
    ad::AdamState<float> s;
    s.step = step;
    if (!ckpt.find(prefix + ".m.0")) return s;
    for (std::size_t i = 0; i < count; ++i) {
        const auto* m = ckpt.find(prefix + ".m." + std::to_string(i));
        const auto* v = ckpt.find(prefix + ".v." + std::to_string(i));
        if (!m || !v) throw TrainingError("checkpoint optimizer state incomplete for " + prefix);
        s.m.push_back(ad::entry_values<float>(*m));
        s.v.push_back(ad::entry_values<float>(*v));
    }
    return s;
}

void require_finite(const LossReport& r, const char* where) {
    for (double v : {r.l1, r.perceptual, r.cycle, r.adv_g, r.adv_d, r.total_g}) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "non-finite loss in " << where << ": l1=" << r.l1 << " perceptual=" << r.perceptual
                << " cycle=" << r.cycle << " adv_g=" << r.adv_g << " adv_d=" << r.adv_d;
            throw TrainingError(msg.str());
        }
    }
}

}  // namespace

TrainingSession::TrainingSession(const TrainConfig& cfg, int light_width, int light_height, float max_radiance)
    : cfg_(cfg),
      light_width_(light_width),
      light_height_(light_height),
      max_radiance_(max_radiance),
      g_((cfg.validate(), cfg.generator_config(light_width, light_height))),
      d_(cfg.discriminator_config()),
      f_(cfg.perceptual_extractor_seed) {
    if (!(max_radiance > 0.0f)) throw TrainingError("max_radiance must be positive");
}

void TrainingSession::set_total_steps(std::int64_t steps) {
    if (steps < 0) throw TrainingError("steps must be >= 0");
    cfg_.steps = steps;
}

LossReport TrainingSession::compute(const Batch& b, Tensor<float>* total_out) const {
    LossReport r;
    Tensor<float> total;
    auto accumulate = [&](const Tensor<float>& term, double lambda, double& slot) {
        slot = term.item();
        auto weighted = ad::scale(term, static_cast<float>(lambda));
        total = total.defined() ? ad::add(total, weighted) : weighted;
    };
    const auto code_s = g_.encode_light(b.light_s);
    const auto code_t = g_.encode_light(b.light_t);
    const auto pred = g_.forward(b.source, code_s, code_t);
    if (cfg_.lambda_l1 > 0.0) accumulate(loss_l1(pred, b.target), cfg_.lambda_l1, r.l1);
    if (cfg_.use_perceptual && cfg_.lambda_p > 0.0) {
        accumulate(loss_perceptual(pred, b.target, f_), cfg_.lambda_p, r.perceptual);
    }
    if (cfg_.use_cycle && cfg_.lambda_c > 0.0) {
        auto back = g_.forward(pred, code_t, code_s);
        accumulate(ad::l1(b.source, back), cfg_.lambda_c, r.cycle);
    }
    if (cfg_.use_adversarial && cfg_.lambda_d > 0.0) {
        accumulate(adversarial_real(d_.forward(pred)), cfg_.lambda_d, r.adv_g);
    }
    r.total_g = total.defined() ? total.item() : 0.0;
    if (total_out) *total_out = total;
    return r;
}

LossReport TrainingSession::evaluate(const Batch& batch) const {
    ad::NoGradGuard guard;
    return compute(batch, nullptr);
}

LossReport TrainingSession::generator_step(const Batch& batch) {
    auto& gp = g_.params().tensors();
    ad::zero_grads<float>(gp);
    Tensor<float> total;
    const LossReport r = compute(batch, &total);
    require_finite(r, "generator step");
    if (!total.defined()) return r;
    ad::backward(total);
    ad::clip_grad_norm<float>(gp, cfg_.grad_clip);
    ad::adam_step<float>(gp, opt_g_, {.lr = cfg_.lr_g * cfg_.lr_scale(step)});
    ad::zero_grads<float>(gp);
    ad::zero_grads<float>(d_.params().tensors());
    return r;
}

double TrainingSession::discriminator_step(const Batch& batch) {
    if (!cfg_.use_adversarial) return 0.0;
    Tensor<float> fake;
    {
        ad::NoGradGuard guard;
        fake = g_.relight(batch.source, batch.light_s, batch.light_t);
    }
    auto& dp = d_.params().tensors();
    ad::zero_grads<float>(dp);
    auto loss = ad::add(adversarial_real(d_.forward(batch.target)), adversarial_fake(d_.forward(fake)));
    const double value = loss.item();
    if (!std::isfinite(value)) throw TrainingError("non-finite discriminator loss");
    ad::backward(loss);
    ad::clip_grad_norm<float>(dp, cfg_.grad_clip);
    ad::adam_step<float>(dp, opt_d_, {.lr = cfg_.lr_d * cfg_.lr_scale(step)});
    ad::zero_grads<float>(dp);
    return value;
}

ad::Checkpoint TrainingSession::to_checkpoint() const {
    ad::Checkpoint ckpt;
    nlohmann::ordered_json m;
    m["format"] = kFormat;
    m["step"] = step;
    m["train_config"] = nlohmann::json::parse(to_json(cfg_));
    m["light_grid"] = {light_width_, light_height_};
    m["max_radiance"] = max_radiance_;
    m["optimizer_steps"] = {opt_g_.step, opt_d_.step};
    m["training_frame_hashes"] = training_hashes;
    m["generator"] = nlohmann::json::parse(g_.architecture_manifest());
    ckpt.manifest_json = m.dump();
    g_.params().append_to(ckpt, "G.");
    d_.params().append_to(ckpt, "D.");
    put_adam(ckpt, "opt_g", opt_g_, g_.params().tensors());
    put_adam(ckpt, "opt_d", opt_d_, d_.params().tensors());
    std::vector<double> rows;
    for (const auto& row : log) {
        const auto& l = row.losses;
        rows.insert(rows.end(), {static_cast<double>(row.step), l.l1, l.perceptual, l.cycle, l.adv_g, l.adv_d,
                                 l.total_g});
    }
    ckpt.entries.push_back(ad::make_entry("log", {static_cast<int>(log.size()), 7}, std::move(rows)));
    return ckpt;
}

TrainingSession TrainingSession::from_checkpoint(const ad::Checkpoint& ckpt) {
    const auto m = nlohmann::json::parse(ckpt.manifest_json);
    if (m.value("format", "") != kFormat) throw TrainingError("checkpoint is not a trained model");
    const auto cfg = train_config_from_json(m.at("train_config").dump());
    TrainingSession s(cfg, m.at("light_grid").at(0).get<int>(), m.at("light_grid").at(1).get<int>(),
                      m.at("max_radiance").get<float>());
    s.g_.params().load_from(ckpt, "G.");
    s.d_.params().load_from(ckpt, "D.");
    s.step = m.at("step").get<std::int64_t>();
    const auto opt_steps = m.at("optimizer_steps");
    s.opt_g_ = get_adam(ckpt, "opt_g", opt_steps.at(0).get<std::int64_t>(), s.g_.params().tensors().size());
    s.opt_d_ = get_adam(ckpt, "opt_d", opt_steps.at(1).get<std::int64_t>(), s.d_.params().tensors().size());
    s.training_hashes = m.at("training_frame_hashes").get<std::vector<std::string>>();
    if (const auto* entry = ckpt.find("log")) {
        const auto rows = ad::entry_values<double>(*entry);
        for (std::size_t i = 0; i + 7 <= rows.size(); i += 7) {
            s.log.push_back({static_cast<std::int64_t>(rows[i]),
                             {rows[i + 1], rows[i + 2], rows[i + 3], rows[i + 4], rows[i + 5], rows[i + 6]}});
        }
    }
    return s;
}

std::size_t pair_for_step(std::uint64_t seed, std::int64_t step, std::size_t pair_count) {
    if (pair_count == 0) throw TrainingError("no training pairs");
    const auto n = static_cast<std::int64_t>(pair_count);
    std::vector<std::size_t> order(pair_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(capture::mix_seed(seed, static_cast<std::uint64_t>(step / n)));
    std::shuffle(order.begin(), order.end(), rng);
    return order[static_cast<std::size_t>(step % n)];
}

std::string loss_log_csv(const std::vector<LogRow>& log) {
    std::ostringstream out;
    out.precision(9);
    out << "step,l1,perceptual,cycle,adv_g,adv_d\n";
    for (const auto& row : log) {
        const auto& l = row.losses;
        out << row.step << ',' << l.l1 << ',' << l.perceptual << ',' << l.cycle << ',' << l.adv_g << ','
            << l.adv_d << '\n';
    }
    return out.str();
}

namespace {

void write_outputs(const TrainingSession& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ad::save_checkpoint(dir / "model.ckpt", s.to_checkpoint());
    std::ofstream csv(dir / "loss_log.csv", std::ios::trunc);
    if (!csv) throw TrainingError("cannot write " + (dir / "loss_log.csv").string());
    csv << loss_log_csv(s.log);
}

}  // namespace

TrainingSession train(const capture::CaptureSequence& seq, const pairs::PairIndex& pairs,
                      const TrainConfig& cfg, const TrainOptions& options) {
    if (pairs.pairs.empty()) throw TrainingError("training needs at least one pair");
    if (seq.frames.empty()) throw TrainingError("training needs a non-empty sequence");
    if (!seq.linear) throw TrainingError("training expects linearized frames");
    cfg.validate();
    const auto& light = seq.frames.front().light;
    TrainingSession session = options.resume ? TrainingSession::from_checkpoint(*options.resume)
                                             : TrainingSession(cfg, light.width(), light.height(), seq.max_radiance);
    if (options.resume) session.set_total_steps(cfg.steps);
    if (!options.resume) {
        std::set<std::size_t> used;
        for (const auto& p : pairs.pairs) {
            used.insert(p.source);
            used.insert(p.target);
        }
        for (std::size_t i : used) {
            if (i >= seq.size()) throw TrainingError("pair references frame " + std::to_string(i));
            session.training_hashes.push_back(imaging::content_hash(seq.frames[i].image));
        }
    }
    const auto& scfg = session.config();
    const std::int64_t last = std::min(cfg.steps, options.stop_at.value_or(cfg.steps));
    while (session.step < last) {
        const auto& pair = pairs.pairs[pair_for_step(scfg.seed, session.step, pairs.pairs.size())];
        const Batch batch = make_batch(seq, pair.source, pair.target, scfg.crop);
        LossReport r = session.generator_step(batch);
        for (int k = 0; k < scfg.d_steps; ++k) r.adv_d = session.discriminator_step(batch);
        session.log.push_back({session.step, r});
        ++session.step;
        if (!options.out_dir.empty() && session.step % scfg.checkpoint_every == 0) {
            write_outputs(session, options.out_dir);
        }
    }
    if (!options.out_dir.empty()) write_outputs(session, options.out_dir);
    return session;
}

}  // namespace deskstage::training
