#include "sskd/serialize.hpp"

#include <cstdio>

namespace sskd {

namespace {

std::string kind_name(AugmentKind k) {
    switch (k) {
        case AugmentKind::weak: return "weak";
        case AugmentKind::strong: return "strong";
        default: return "eval";
    }
}

AugmentKind kind_from_name(const std::string& name) {
    if (name == "weak") return AugmentKind::weak;
    if (name == "strong") return AugmentKind::strong;
    if (name == "eval") return AugmentKind::eval;
    throw ConfigError("unknown augmentation kind: " + name);
}

}  // namespace

void to_json(nlohmann::json& j, const AdamHyper& h) {
    j = {{"beta1", h.beta1}, {"beta2", h.beta2}, {"epsilon", h.epsilon}};
}

void from_json(const nlohmann::json& j, AdamHyper& h) {
    h.beta1 = j.value("beta1", h.beta1);
    h.beta2 = j.value("beta2", h.beta2);
    h.epsilon = j.value("epsilon", h.epsilon);
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
    j = {{"kind", spec.kind == ModelKind::mlp ? "mlp" : "conv"},
         {"input_dim", spec.input_dim},
         {"input_height", spec.input_height},
         {"input_width", spec.input_width},
         {"hidden_widths", spec.hidden_widths},
         {"num_classes", spec.num_classes},
         {"dropout", spec.dropout_rate},
         {"conv_channels", spec.conv_channels}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
    const std::string kind = j.value("kind", std::string("mlp"));
    if (kind == "mlp") spec.kind = ModelKind::mlp;
    else if (kind == "conv") spec.kind = ModelKind::conv;
    else throw ConfigError("unknown model kind: " + kind);
    spec.input_dim = j.value("input_dim", spec.input_dim);
    spec.input_height = j.value("input_height", spec.input_height);
    spec.input_width = j.value("input_width", spec.input_width);
    spec.hidden_widths = j.value("hidden_widths", spec.hidden_widths);
    spec.num_classes = j.value("num_classes", spec.num_classes);
    spec.dropout_rate = j.value("dropout", spec.dropout_rate);
    spec.conv_channels = j.value("conv_channels", spec.conv_channels);
}

void to_json(nlohmann::json& j, const NormalizationStats& s) {
    j = {{"mean", s.mean}, {"stddev", s.stddev}};
}

void from_json(const nlohmann::json& j, NormalizationStats& s) {
    s.mean = j.value("mean", s.mean);
    s.stddev = j.value("stddev", s.stddev);
}

void to_json(nlohmann::json& j, const AugmentationPolicy& p) {
    j = {{"kind", kind_name(p.kind)},
         {"resize_height", p.resize_height},
         {"crop_size", p.crop_size},
         {"rotations_deg", p.rotations_deg},
         {"hflip_prob", p.hflip_prob},
         {"vflip_prob", p.vflip_prob},
         {"noise_scale", p.noise_scale},
         {"feature_drop_prob", p.feature_drop_prob},
         {"stats", p.stats}};
}

void from_json(const nlohmann::json& j, AugmentationPolicy& p) {
    p.kind = kind_from_name(j.value("kind", kind_name(p.kind)));
    p.resize_height = j.value("resize_height", p.resize_height);
    p.crop_size = j.value("crop_size", p.crop_size);
    p.rotations_deg = j.value("rotations_deg", p.rotations_deg);
    p.hflip_prob = j.value("hflip_prob", p.hflip_prob);
    p.vflip_prob = j.value("vflip_prob", p.vflip_prob);
    p.noise_scale = j.value("noise_scale", p.noise_scale);
    p.feature_drop_prob = j.value("feature_drop_prob", p.feature_drop_prob);
    if (j.contains("stats")) j.at("stats").get_to(p.stats);
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = {{"ensemble_size", cfg.ensemble_size},
         {"lambda", cfg.lambda},
         {"temperature", cfg.temperature},
         {"tau", cfg.tau},
         {"base_lr", cfg.base_lr},
         {"epochs_per_iteration", cfg.epochs_per_iteration},
         {"ssl_iterations", cfg.ssl_iterations},
         {"batch_size", cfg.batch_size},
         {"adam", cfg.adam},
         {"seed", cfg.seed},
         {"per_member_augmentation", cfg.per_member_augmentation},
         {"reinit_each_iteration", cfg.reinit_each_iteration},
         {"model", cfg.model},
         {"weak_policy", cfg.weak_policy},
         {"strong_policy", cfg.strong_policy},
         {"eval_policy", cfg.eval_policy}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    cfg.ensemble_size = j.value("ensemble_size", cfg.ensemble_size);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.base_lr = j.value("base_lr", cfg.base_lr);
    cfg.epochs_per_iteration = j.value("epochs_per_iteration", cfg.epochs_per_iteration);
    cfg.ssl_iterations = j.value("ssl_iterations", cfg.ssl_iterations);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    if (j.contains("adam")) j.at("adam").get_to(cfg.adam);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.per_member_augmentation =
        j.value("per_member_augmentation", cfg.per_member_augmentation);
    cfg.reinit_each_iteration =
        j.value("reinit_each_iteration", cfg.reinit_each_iteration);
    if (j.contains("model")) j.at("model").get_to(cfg.model);
    if (j.contains("weak_policy")) j.at("weak_policy").get_to(cfg.weak_policy);
    if (j.contains("strong_policy")) j.at("strong_policy").get_to(cfg.strong_policy);
    if (j.contains("eval_policy")) j.at("eval_policy").get_to(cfg.eval_policy);
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
    j = {{"num_classes", s.num_classes},
         {"class_counts", s.class_counts},
         {"dim", s.dim},
         {"separation", s.separation},
         {"noise", s.noise}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
    s.num_classes = j.value("num_classes", s.num_classes);
    s.class_counts = j.value("class_counts", s.class_counts);
    s.dim = j.value("dim", s.dim);
    s.separation = j.value("separation", s.separation);
    s.noise = j.value("noise", s.noise);
}

std::string config_hash(const nlohmann::json& j) {
    const std::string canonical = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : canonical) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sskd
