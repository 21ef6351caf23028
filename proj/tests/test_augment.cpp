#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sskd/augment.hpp"
#include "sskd/rng.hpp"

using namespace sskd;

namespace {

Example vector_example(std::vector<double> x, int label = 0) {
    Example e;
    e.id = "v";
    e.payload = std::move(x);
    e.label = label;
    e.audit_label = label;
    return e;
}

Example raster_example(std::size_t h, std::size_t w) {
    RasterGrid g;
    g.height = h;
    g.width = w;
    g.values.resize(h * w);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        g.values[i] = static_cast<double>(i) / static_cast<double>(g.values.size());
    Example e;
    e.id = "r";
    e.payload = std::move(g);
    e.label = 1;
    e.audit_label = 1;
    return e;
}

NormalizationStats identity_stats(std::size_t dim) {
    NormalizationStats s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 1.0);
    return s;
}

AugmentationPolicy vector_policy(AugmentKind kind, double noise, double drop,
                                 std::size_t dim) {
    AugmentationPolicy p;
    p.kind = kind;
    p.noise_scale = noise;
    p.feature_drop_prob = drop;
    p.stats = identity_stats(dim);
    return p;
}

const std::vector<double>& vec(const Example& e) {
    return std::get<std::vector<double>>(e.payload);
}

const RasterGrid& grid(const Example& e) { return std::get<RasterGrid>(e.payload); }

}  // namespace

TEST_CASE("fit_normalizer: constant features floor the deviation and map to zero") {
    std::vector<Example> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(vector_example({5.0, double(i)}));
    const auto stats = fit_normalizer(pool);
    CHECK(stats.mean[0] == doctest::Approx(5.0));
    CHECK(stats.stddev[0] == doctest::Approx(1e-8));

    AugmentationPolicy eval;
    eval.kind = AugmentKind::eval;
    eval.stats = stats;
    const auto out = eval_transform(pool[0], eval);
    CHECK(vec(out)[0] == doctest::Approx(0.0));
}

TEST_CASE("fit_normalizer: standard-normal features give stats near (0,1)") {
    RngStream rng(40, 0);
    std::vector<Example> pool;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(3);
        for (double& v : x) v = rng.normal();
        pool.push_back(vector_example(std::move(x)));
    }
    const auto stats = fit_normalizer(pool);
    for (double m : stats.mean) CHECK(std::abs(m) < 0.1);
    for (double s : stats.stddev) CHECK(std::abs(s - 1.0) < 0.1);
}

TEST_CASE("fit_normalizer: normalizing the fitting pool centers it") {
    RngStream rng(41, 0);
    std::vector<Example> pool;
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(4);
        for (double& v : x) v = 3.0 + 2.0 * rng.normal();
        pool.push_back(vector_example(std::move(x)));
    }
    const auto stats = fit_normalizer(pool);
    AugmentationPolicy eval;
    eval.kind = AugmentKind::eval;
    eval.stats = stats;
    std::vector<double> mean(4, 0.0);
    for (const Example& e : pool) {
        const auto out = eval_transform(e, eval);
        for (std::size_t j = 0; j < 4; ++j) mean[j] += vec(out)[j];
    }
    for (double m : mean) CHECK(std::abs(m / 200.0) <= 1e-9);
}

TEST_CASE("fit_normalizer: empty pool is a configuration error") {
    CHECK_THROWS_AS((void)fit_normalizer({}), ConfigError);
}

TEST_CASE("weak augment: zero noise leaves the normalized vector unchanged") {
    const auto e = vector_example({1.0, -2.0, 0.5});
    const auto policy = vector_policy(AugmentKind::weak, 0.0, 0.0, 3);
    RngStream rng(1, 0);
    const auto out = weak_augment(e, policy, rng);
    CHECK(vec(out) == vec(e));
    CHECK(rng.draws() == 0);  // degenerate knobs consume nothing
}

TEST_CASE("weak augment: identical rng state reproduces the output") {
    const auto e = vector_example({1.0, -2.0, 0.5, 4.0});
    const auto policy = vector_policy(AugmentKind::weak, 0.3, 0.0, 4);
    RngStream r1(9, 3), r2(9, 3);
    const auto a = weak_augment(e, policy, r1);
    const auto b = weak_augment(e, policy, r2);
    CHECK(vec(a) == vec(b));
    CHECK(vec(a) != vec(e));
}

TEST_CASE("strong augment: drop probability zero and equal noise matches weak") {
    const auto e = vector_example({0.2, 0.4, -1.0});
    const auto weak = vector_policy(AugmentKind::weak, 0.25, 0.0, 3);
    auto strong = vector_policy(AugmentKind::strong, 0.25, 0.0, 3);
    RngStream r1(5, 5), r2(5, 5);
    CHECK(vec(weak_augment(e, weak, r1)) == vec(strong_augment(e, strong, r2)));
}

TEST_CASE("strong augment: feature dropout zeroes features before normalization") {
    const auto e = vector_example({10.0, 10.0, 10.0, 10.0, 10.0, 10.0});
    auto strong = vector_policy(AugmentKind::strong, 0.0, 1.0, 6);
    RngStream rng(2, 0);
    const auto out = strong_augment(e, strong, rng);
    for (double v : vec(out)) CHECK(v == 0.0);  // every feature dropped
}

TEST_CASE("strong and weak differ almost surely when noise is positive") {
    const auto e = vector_example({0.0, 0.0, 0.0, 0.0});
    const auto weak = vector_policy(AugmentKind::weak, 0.1, 0.0, 4);
    const auto strong = vector_policy(AugmentKind::strong, 0.5, 0.0, 4);
    RngStream base(77, 0);
    int differing = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        RngStream rw = base.substream("w", rep);
        RngStream rs = base.substream("s", rep);
        if (vec(weak_augment(e, weak, rw)) != vec(strong_augment(e, strong, rs)))
            ++differing;
    }
    CHECK(differing == 1000);
}

TEST_CASE("eval transform: deterministic, repeatable, label-preserving") {
    const auto e = vector_example({3.0, 1.0}, 1);
    AugmentationPolicy eval;
    eval.kind = AugmentKind::eval;
    eval.stats = identity_stats(2);
    const auto once = eval_transform(e, eval);
    const auto twice = eval_transform(e, eval);
    CHECK(vec(once) == vec(twice));
    CHECK(once.label == e.label);
    CHECK(once.id == e.id);
}

TEST_CASE("eval transform with identity stats is idempotent") {
    auto e = raster_example(12, 16);
    AugmentationPolicy eval;
    eval.kind = AugmentKind::eval;
    eval.resize_height = 8;
    eval.crop_size = 8;
    eval.stats = {{0.0}, {1.0}};
    const auto once = eval_transform(e, eval);
    const auto again = eval_transform(once, eval);
    CHECK(grid(once).values == grid(again).values);
}

TEST_CASE("raster weak augment with degenerate knobs equals the eval transform") {
    const auto e = raster_example(20, 24);
    AugmentationPolicy weak;
    weak.kind = AugmentKind::weak;
    weak.resize_height = 16;
    weak.crop_size = 12;
    weak.rotations_deg = {0};
    weak.hflip_prob = 0.0;
    weak.vflip_prob = 0.0;
    weak.stats = {{0.1}, {0.9}};
    AugmentationPolicy eval = weak;
    eval.kind = AugmentKind::eval;

    RngStream rng(3, 0);
    const auto a = weak_augment(e, weak, rng);
    const auto b = eval_transform(e, eval);
    CHECK(rng.draws() == 0);
    CHECK(grid(a).values == grid(b).values);
}

TEST_CASE("strong crop on an exactly-crop-sized image has a single valid offset") {
    const auto e = raster_example(10, 10);
    AugmentationPolicy strong;
    strong.kind = AugmentKind::strong;
    strong.crop_size = 10;
    strong.rotations_deg = {0};
    strong.stats = {{0.0}, {1.0}};
    AugmentationPolicy weak = strong;
    weak.kind = AugmentKind::weak;

    RngStream r1(6, 0), r2(6, 0);
    const auto a = strong_augment(e, strong, r1);
    const auto b = weak_augment(e, weak, r2);
    CHECK(r1.draws() == 0);
    CHECK(grid(a).values == grid(b).values);
}

TEST_CASE("right-angle rotations compose to the identity") {
    const auto e = raster_example(8, 8);
    AugmentationPolicy weak;
    weak.kind = AugmentKind::weak;
    weak.rotations_deg = {90};  // deterministic single rotation
    weak.stats = {{0.0}, {1.0}};
    RngStream rng(0, 0);
    Example turned = e;
    for (int i = 0; i < 4; ++i) turned = weak_augment(turned, weak, rng);
    CHECK(rng.draws() == 0);
    CHECK(grid(turned).values == grid(e).values);
}

TEST_CASE("payload smaller than the crop is a configuration error") {
    const auto e = raster_example(6, 6);
    AugmentationPolicy weak;
    weak.kind = AugmentKind::weak;
    weak.crop_size = 8;
    weak.rotations_deg = {0};
    RngStream rng(0, 0);
    CHECK_THROWS_AS((void)weak_augment(e, weak, rng), ConfigError);
}

TEST_CASE("augmentations preserve payload shape after crop and the label") {
    const auto e = raster_example(18, 30);
    AugmentationPolicy strong;
    strong.kind = AugmentKind::strong;
    strong.resize_height = 16;
    strong.crop_size = 12;
    strong.hflip_prob = 0.5;
    strong.vflip_prob = 0.5;
    strong.stats = {{0.0}, {1.0}};
    RngStream rng(123, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto out = strong_augment(e, strong, rng);
        CHECK(grid(out).height == 12);
        CHECK(grid(out).width == 12);
        CHECK(out.label == e.label);
    }
}

TEST_CASE("policy validation rejects inconsistent settings") {
    AugmentationPolicy p;
    p.kind = AugmentKind::eval;
    p.noise_scale = 0.1;
    CHECK_THROWS_AS(validate_policy(p), ConfigError);  // stochastic eval

    AugmentationPolicy weak;
    weak.kind = AugmentKind::weak;
    weak.rotations_deg = {45};
    CHECK_THROWS_AS(validate_policy(weak), ConfigError);  // not a right angle

    weak.rotations_deg = {0};
    weak.feature_drop_prob = 0.2;
    CHECK_THROWS_AS(validate_policy(weak), ConfigError);  // dropout is strong-only

    AugmentationPolicy w = vector_policy(AugmentKind::weak, 0.5, 0.0, 2);
    AugmentationPolicy s = vector_policy(AugmentKind::strong, 0.1, 0.0, 2);
    CHECK_THROWS_AS(validate_policy_pair(w, s), ConfigError);  // strong weaker than weak
}

TEST_CASE("wrong policy kind is rejected at the call site") {
    const auto e = vector_example({1.0, 2.0});
    const auto eval = vector_policy(AugmentKind::eval, 0.0, 0.0, 2);
    RngStream rng(0, 0);
    CHECK_THROWS_AS((void)weak_augment(e, eval, rng), InvalidParameterError);
    const auto weak = vector_policy(AugmentKind::weak, 0.0, 0.0, 2);
    CHECK_THROWS_AS((void)eval_transform(e, weak), InvalidParameterError);
}
