#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "sskd/dataset.hpp"
#include "sskd/rng.hpp"

using namespace sskd;

namespace {

Dataset uniform_dataset(int classes, int per_class, int dim = 4) {
    SyntheticSpec spec;
    spec.num_classes = classes;
    spec.class_counts.assign(classes, per_class);
    spec.dim = dim;
    spec.separation = 2.0;
    spec.noise = 1.0;
    return generate_synthetic(spec, 11);
}

std::vector<int> class_histogram(const Dataset& ds) {
    std::vector<int> h(static_cast<std::size_t>(ds.num_classes), 0);
    for (const Example& e : ds.examples) ++h[static_cast<std::size_t>(*e.label)];
    return h;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("stratified split: exact divisibility gives exact per-class sizes") {
    const Dataset ds = uniform_dataset(3, 100);
    SplitSpec spec;
    spec.seed = 5;
    const auto split = stratified_split(ds, spec);
    CHECK(class_histogram(split.train) == std::vector<int>{70, 70, 70});
    CHECK(class_histogram(split.validation) == std::vector<int>{10, 10, 10});
    CHECK(class_histogram(split.test) == std::vector<int>{20, 20, 20});
}

TEST_CASE("stratified split: a seven-example class lands 5/1/1 by largest remainder") {
    // raw shares 4.9 / 0.7 / 1.4 -> floors 4/0/1, leftovers to the two
    // largest remainders (train, then validation)
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.class_counts = {7, 100};
    spec.dim = 3;
    spec.separation = 1.0;
    const Dataset ds = generate_synthetic(spec, 3);
    SplitSpec split_spec;
    split_spec.seed = 1;
    const auto split = stratified_split(ds, split_spec);
    CHECK(class_histogram(split.train)[0] == 5);
    CHECK(class_histogram(split.validation)[0] == 1);
    CHECK(class_histogram(split.test)[0] == 1);
}

TEST_CASE("stratified split: partition is exact and deterministic") {
    const Dataset ds = uniform_dataset(4, 33, 5);
    SplitSpec spec;
    spec.seed = 42;
    const auto a = stratified_split(ds, spec);
    const auto b = stratified_split(ds, spec);

    std::set<std::string> ids;
    for (const auto* part : {&a.train, &a.validation, &a.test})
        for (const Example& e : part->examples) CHECK(ids.insert(e.id).second);
    CHECK(ids.size() == ds.examples.size());

    auto id_list = [](const Dataset& d) {
        std::vector<std::string> v;
        for (const Example& e : d.examples) v.push_back(e.id);
        return v;
    };
    CHECK(id_list(a.train) == id_list(b.train));
    CHECK(id_list(a.validation) == id_list(b.validation));
    CHECK(id_list(a.test) == id_list(b.test));

    SplitSpec other = spec;
    other.seed = 43;
    const auto c = stratified_split(ds, other);
    CHECK(id_list(a.train) != id_list(c.train));
}

TEST_CASE("stratified split: rejects a dataset with a missing class") {
    Dataset ds = uniform_dataset(3, 10);
    ds.num_classes = 4;  // class 3 has no examples
    SplitSpec spec;
    CHECK_THROWS_AS((void)stratified_split(ds, spec), ConfigError);
}

TEST_CASE("stratified split: fraction sanity is enforced") {
    const Dataset ds = uniform_dataset(2, 10);
    SplitSpec spec;
    spec.train_fraction = 0.9;  // sums to 1.2
    CHECK_THROWS_AS((void)stratified_split(ds, spec), ConfigError);
}

TEST_CASE("mask_labels: p=1 keeps everything labeled") {
    const Dataset ds = uniform_dataset(3, 20);
    const auto pools = mask_labels(ds, 1.0, 9);
    CHECK(pools.unlabeled.empty());
    CHECK(pools.labeled.size() == ds.examples.size());
    for (OriginTag t : pools.labeled_origin) CHECK(t == 0);
}

TEST_CASE("mask_labels: 10 percent of 70 per class keeps 7 per class") {
    const Dataset ds = uniform_dataset(3, 70);
    const auto pools = mask_labels(ds, 0.10, 9);
    CHECK(pools.labeled.size() == 21);
    CHECK(pools.unlabeled.size() == ds.examples.size() - 21);
    const auto counts = pools.labeled_class_counts();
    for (auto c : counts) CHECK(c == 7);
}

TEST_CASE("mask_labels: tiny classes keep at least one label") {
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.class_counts = {3, 40};
    spec.dim = 3;
    const Dataset ds = generate_synthetic(spec, 4);
    const auto pools = mask_labels(ds, 0.05, 1);
    const auto counts = pools.labeled_class_counts();
    CHECK(counts[0] == 1);  // round(0.15) floors to the one-label minimum
    CHECK(counts[1] == 2);  // round(2.0)
}

TEST_CASE("mask_labels: conservation, hidden audit labels and stripped labels") {
    const Dataset ds = uniform_dataset(4, 25);
    const auto pools = mask_labels(ds, 0.3, 17);
    CHECK(pools.labeled.size() + pools.unlabeled.size() == ds.examples.size());
    for (const Example& e : pools.unlabeled) {
        CHECK_FALSE(e.label.has_value());
        CHECK(e.audit_label.has_value());
    }
    for (const Example& e : pools.labeled) {
        CHECK(e.label.has_value());
        CHECK(e.audit_label == e.label);
    }
    // per-class labeled counts within 1 of p * class size
    const auto counts = pools.labeled_class_counts();
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) - 0.3 * 25.0) <= 1.0);
}

TEST_CASE("mask_labels: rejects fractions outside (0, 1]") {
    const Dataset ds = uniform_dataset(2, 10);
    CHECK_THROWS_AS((void)mask_labels(ds, 0.0, 1), InvalidParameterError);
    CHECK_THROWS_AS((void)mask_labels(ds, 1.5, 1), InvalidParameterError);
}

TEST_CASE("generate_synthetic: bookkeeping and determinism") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.class_counts = {600, 150, 150, 100};
    spec.dim = 16;
    spec.separation = 1.0;
    const Dataset a = generate_synthetic(spec, 21);
    CHECK(a.examples.size() == 1000);
    CHECK(a.num_classes == 4);
    CHECK(class_histogram(a) == std::vector<int>{600, 150, 150, 100});

    const Dataset b = generate_synthetic(spec, 21);
    REQUIRE(a.examples.size() == b.examples.size());
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        CHECK(a.examples[i].id == b.examples[i].id);
        CHECK(std::get<std::vector<double>>(a.examples[i].payload) ==
              std::get<std::vector<double>>(b.examples[i].payload));
    }
    const Dataset c = generate_synthetic(spec, 22);
    CHECK(std::get<std::vector<double>>(a.examples[0].payload) !=
          std::get<std::vector<double>>(c.examples[0].payload));
}

TEST_CASE("generate_synthetic: rejects degenerate specs") {
    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.class_counts = {5, 5};
    spec.dim = 1;
    CHECK_THROWS_AS((void)generate_synthetic(spec, 0), ConfigError);
    spec.dim = 4;
    spec.separation = 0.0;
    CHECK_THROWS_AS((void)generate_synthetic(spec, 0), ConfigError);
    spec.separation = 1.0;
    spec.class_counts = {5};
    CHECK_THROWS_AS((void)generate_synthetic(spec, 0), ConfigError);
}

namespace {

// Tiny multinomial logistic regression on raw features; test-only oracle for
// the separability knob.
double linear_probe_bacc(const Dataset& train, const Dataset& test) {
    const int C = train.num_classes;
    const auto dim = std::get<std::vector<double>>(train.examples[0].payload).size();
    std::vector<double> W(dim * static_cast<std::size_t>(C), 0.0);
    std::vector<double> b(static_cast<std::size_t>(C), 0.0);

    const double lr = 0.1;
    for (int step = 0; step < 300; ++step) {
        std::vector<double> gW(W.size(), 0.0), gb(b.size(), 0.0);
        for (const Example& e : train.examples) {
            const auto& x = std::get<std::vector<double>>(e.payload);
            std::vector<double> z(b);
            for (std::size_t j = 0; j < dim; ++j)
                for (int c = 0; c < C; ++c)
                    z[static_cast<std::size_t>(c)] +=
                        x[j] * W[j * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)];
            const double hi = *std::max_element(z.begin(), z.end());
            double total = 0.0;
            for (double& v : z) {
                v = std::exp(v - hi);
                total += v;
            }
            for (int c = 0; c < C; ++c) {
                const double p = z[static_cast<std::size_t>(c)] / total;
                const double g = p - (c == *e.label ? 1.0 : 0.0);
                gb[static_cast<std::size_t>(c)] += g;
                for (std::size_t j = 0; j < dim; ++j)
                    gW[j * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)] +=
                        g * x[j];
            }
        }
        const double inv_n = 1.0 / static_cast<double>(train.examples.size());
        for (std::size_t i = 0; i < W.size(); ++i) W[i] -= lr * gW[i] * inv_n;
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i] * inv_n;
    }

    std::vector<double> recall_num(static_cast<std::size_t>(C), 0.0);
    std::vector<double> recall_den(static_cast<std::size_t>(C), 0.0);
    for (const Example& e : test.examples) {
        const auto& x = std::get<std::vector<double>>(e.payload);
        std::vector<double> z(b);
        for (std::size_t j = 0; j < dim; ++j)
            for (int c = 0; c < C; ++c)
                z[static_cast<std::size_t>(c)] +=
                    x[j] * W[j * static_cast<std::size_t>(C) + static_cast<std::size_t>(c)];
        const int pred =
            static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        recall_den[static_cast<std::size_t>(*e.label)] += 1.0;
        if (pred == *e.label) recall_num[static_cast<std::size_t>(*e.label)] += 1.0;
    }
    double bacc = 0.0;
    for (int c = 0; c < C; ++c)
        bacc += recall_den[static_cast<std::size_t>(c)] > 0
                    ? recall_num[static_cast<std::size_t>(c)] /
                          recall_den[static_cast<std::size_t>(c)]
                    : 0.0;
    return bacc / C;
}

}  // namespace

TEST_CASE("generate_synthetic: vanishing separation is near chance for a linear probe") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.class_counts = {120, 120, 120, 120};
    spec.dim = 8;
    spec.separation = 1e-9;
    spec.noise = 1.0;
    const Dataset train = generate_synthetic(spec, 101);
    const Dataset test = generate_synthetic(spec, 202);
    const double bacc = linear_probe_bacc(train, test);
    CHECK(std::abs(bacc - 0.25) < 0.08);
}

TEST_CASE("generate_synthetic: large separation is easily separable") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.class_counts = {120, 120, 120, 120};
    spec.dim = 8;
    spec.separation = 5.0;
    spec.noise = 0.5;
    const Dataset train = generate_synthetic(spec, 101);
    const Dataset test = generate_synthetic(spec, 101);
    CHECK(linear_probe_bacc(train, test) > 0.95);
}

TEST_CASE("vector dataset file round trip is bit-exact") {
    const Dataset ds = uniform_dataset(3, 9, 5);
    const std::string path = temp_path("sskd_vec_roundtrip.csv");
    save_dataset(ds, path);
    const Dataset back = load_dataset(path);
    REQUIRE(back.examples.size() == ds.examples.size());
    CHECK(back.num_classes == ds.num_classes);
    for (std::size_t i = 0; i < ds.examples.size(); ++i) {
        CHECK(back.examples[i].id == ds.examples[i].id);
        CHECK(back.examples[i].label == ds.examples[i].label);
        CHECK(std::get<std::vector<double>>(back.examples[i].payload) ==
              std::get<std::vector<double>>(ds.examples[i].payload));
    }
    std::filesystem::remove(path);
}

TEST_CASE("raster dataset round trip preserves quantized grids") {
    Dataset ds;
    ds.num_classes = 2;
    RngStream rng(8, 0);
    for (int i = 0; i < 4; ++i) {
        RasterGrid g;
        g.height = 6;
        g.width = 5;
        g.values.resize(30);
        for (double& v : g.values)
            v = static_cast<double>(rng.uniform_below(65536)) / 65535.0;
        Example e;
        e.id = "img-" + std::to_string(i);
        e.payload = g;
        e.label = i % 2;
        e.audit_label = e.label;
        ds.examples.push_back(e);
    }
    const auto dir = std::filesystem::temp_directory_path() / "sskd_raster_rt";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "manifest.csv").string();
    save_dataset(ds, path);
    const Dataset back = load_dataset(path);
    REQUIRE(back.examples.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = std::get<RasterGrid>(ds.examples[i].payload);
        const auto& b = std::get<RasterGrid>(back.examples[i].payload);
        CHECK(a.height == b.height);
        CHECK(a.width == b.width);
        CHECK(a.values == b.values);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("loader rejects labels beyond the declared class count") {
    const std::string path = temp_path("sskd_bad_label.csv");
    std::ofstream out(path);
    out << "# sskd-dataset v1 kind=vector classes=3 dim=2\n";
    out << "id,label,f0,f1\n";
    out << "a,0,0.5,0.5\n";
    out << "b,3,0.5,0.5\n";
    out.close();
    CHECK_THROWS_AS((void)load_dataset(path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("loader names the offending line of a malformed row") {
    const std::string path = temp_path("sskd_bad_number.csv");
    std::ofstream out(path);
    out << "# sskd-dataset v1 kind=vector classes=2 dim=2\n";
    out << "id,label,f0,f1\n";
    out << "a,0,0.5,oops\n";
    out.close();
    try {
        (void)load_dataset(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("loader rejects empty and headerless files") {
    const std::string path = temp_path("sskd_empty.csv");
    std::ofstream(path).close();
    CHECK_THROWS_AS((void)load_dataset(path), ParseError);
    std::ofstream out(path);
    out << "id,label,f0\n";
    out.close();
    CHECK_THROWS_AS((void)load_dataset(path), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("loader rejects duplicate ids") {
    const std::string path = temp_path("sskd_dup.csv");
    std::ofstream out(path);
    out << "# sskd-dataset v1 kind=vector classes=2 dim=1\n";
    out << "id,label,f0\n";
    out << "a,0,1.0\n";
    out << "a,1,2.0\n";
    out.close();
    CHECK_THROWS_AS((void)load_dataset(path), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("isic2018 profile matches the published class counts") {
    const auto counts = isic2018_class_counts();
    CHECK(counts == std::vector<int>{1103, 6716, 529, 325, 1087, 120, 135});
    int total = 0;
    for (int c : counts) total += c;
    CHECK(total == 10015);
}
