#include "sskd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <unordered_set>

#include "sskd/matrix.hpp"

namespace fs = std::filesystem;

namespace sskd {

std::vector<std::int64_t> DatasetPools::labeled_class_counts() const {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(num_classes), 0);
    for (const Example& e : labeled) {
        if (!e.label || *e.label < 0 || *e.label >= num_classes)
            throw InvalidStateError("labeled pool contains an example without a valid label");
        ++counts[static_cast<std::size_t>(*e.label)];
    }
    return counts;
}

void SplitSpec::validate() const {
    const double fracs[3] = {train_fraction, validation_fraction, test_fraction};
    double sum = 0.0;
    for (double f : fracs) {
        if (!(f >= 0.0 && f <= 1.0))
            throw ConfigError("split fractions must lie in [0, 1]");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
        throw InvalidParameterError("labeled fraction must lie in (0, 1]");
}

namespace {

// Largest-remainder apportionment of n items over the given fractions, then
// one item forced into every positive-fraction bucket.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions) {
    const std::size_t k = fractions.size();
    std::vector<std::size_t> out(k, 0);
    std::vector<double> remainder(k, 0.0);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double raw = static_cast<double>(n) * fractions[j];
        out[j] = static_cast<std::size_t>(std::floor(raw));
        remainder[j] = raw - std::floor(raw);
        assigned += out[j];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainder[a] > remainder[b];
    });
    for (std::size_t extra = 0; assigned < n; ++extra) {
        ++out[order[extra % k]];
        ++assigned;
    }

    std::size_t positive = 0;
    for (std::size_t j = 0; j < k; ++j)
        if (fractions[j] > 0.0) ++positive;
    if (n < positive)
        throw ConfigError("class too small to appear in every split");
    // Steal from the fullest bucket until every positive bucket is non-empty.
    for (std::size_t j = 0; j < k; ++j) {
        while (fractions[j] > 0.0 && out[j] == 0) {
            std::size_t donor = k;
            for (std::size_t d = 0; d < k; ++d)
                if (out[d] > 1 && (donor == k || out[d] > out[donor])) donor = d;
            if (donor == k) throw ConfigError("class too small to appear in every split");
            --out[donor];
            ++out[j];
        }
    }
    return out;
}

std::map<int, std::vector<std::size_t>> group_by_class(const Dataset& dataset) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        const Example& e = dataset.examples[i];
        if (!e.label)
            throw InvalidInputError("stratified operations require labeled examples");
        if (*e.label < 0 || *e.label >= dataset.num_classes)
            throw InvalidInputError("label outside [0, num_classes)");
        groups[*e.label].push_back(i);
    }
    return groups;
}

}  // namespace

SplitResult stratified_split(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    if (dataset.num_classes < 2)
        throw ConfigError("stratified_split: dataset must declare at least two classes");
    auto groups = group_by_class(dataset);
    if (static_cast<int>(groups.size()) != dataset.num_classes)
        throw ConfigError("stratified_split: every class needs at least one example");

    const double fractions[3] = {spec.train_fraction, spec.validation_fraction,
                                 spec.test_fraction};
    RngStream root(spec.seed, RngStream::hash_tag("stratified_split"));

    // Membership of every example: 0 train, 1 validation, 2 test.
    std::vector<int> part(dataset.examples.size(), -1);
    for (auto& [cls, indices] : groups) {
        RngStream g = root.substream("class", static_cast<std::uint64_t>(cls));
        g.shuffle(indices);
        const auto sizes = apportion(indices.size(), fractions);
        std::size_t cursor = 0;
        for (int j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < sizes[static_cast<std::size_t>(j)]; ++i)
                part[indices[cursor++]] = j;
    }

    SplitResult result;
    result.train.num_classes = dataset.num_classes;
    result.validation.num_classes = dataset.num_classes;
    result.test.num_classes = dataset.num_classes;
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        switch (part[i]) {
            case 0: result.train.examples.push_back(dataset.examples[i]); break;
            case 1: result.validation.examples.push_back(dataset.examples[i]); break;
            default: result.test.examples.push_back(dataset.examples[i]); break;
        }
    }
    return result;
}

DatasetPools mask_labels(const Dataset& train, double labeled_fraction,
                         std::uint64_t seed) {
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
        throw InvalidParameterError("mask_labels: labeled fraction must lie in (0, 1]");
    auto groups = group_by_class(train);

    RngStream root(seed, RngStream::hash_tag("mask_labels"));
    std::vector<bool> keep(train.examples.size(), false);
    for (auto& [cls, indices] : groups) {
        RngStream g = root.substream("class", static_cast<std::uint64_t>(cls));
        g.shuffle(indices);
        auto want = static_cast<std::size_t>(
            std::llround(labeled_fraction * static_cast<double>(indices.size())));
        want = std::clamp<std::size_t>(want, 1, indices.size());
        for (std::size_t i = 0; i < want; ++i) keep[indices[i]] = true;
    }

    DatasetPools pools;
    pools.num_classes = train.num_classes;
    for (std::size_t i = 0; i < train.examples.size(); ++i) {
        Example e = train.examples[i];
        e.audit_label = e.label;
        if (keep[i]) {
            pools.labeled.push_back(std::move(e));
            pools.labeled_origin.push_back(0);
        } else {
            e.label.reset();
            pools.unlabeled.push_back(std::move(e));
        }
    }
    return pools;
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.num_classes < 2)
        throw ConfigError("generate_synthetic: need at least two classes");
    if (static_cast<int>(spec.class_counts.size()) != spec.num_classes)
        throw ConfigError("generate_synthetic: class_counts size must equal num_classes");
    for (int n : spec.class_counts)
        if (n < 1) throw ConfigError("generate_synthetic: every class count must be >= 1");
    if (spec.dim < 2) throw ConfigError("generate_synthetic: dimension must be >= 2");
    if (!(spec.separation > 0.0) || !std::isfinite(spec.separation))
        throw ConfigError("generate_synthetic: separation must be positive");
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
        throw ConfigError("generate_synthetic: noise must be non-negative");

    RngStream root(seed, RngStream::hash_tag("synthetic"));
    Dataset out;
    out.num_classes = spec.num_classes;

    std::vector<std::vector<double>> centers(static_cast<std::size_t>(spec.num_classes));
    for (int c = 0; c < spec.num_classes; ++c) {
        RngStream g = root.substream("center", static_cast<std::uint64_t>(c));
        auto& center = centers[static_cast<std::size_t>(c)];
        center.resize(static_cast<std::size_t>(spec.dim));
        for (double& v : center) v = spec.separation * g.normal();
    }

    for (int c = 0; c < spec.num_classes; ++c) {
        RngStream g = root.substream("points", static_cast<std::uint64_t>(c));
        const auto& center = centers[static_cast<std::size_t>(c)];
        for (int i = 0; i < spec.class_counts[static_cast<std::size_t>(c)]; ++i) {
            Example e;
            e.id = "c" + std::to_string(c) + "-" + std::to_string(i);
            std::vector<double> x(static_cast<std::size_t>(spec.dim));
            for (std::size_t j = 0; j < x.size(); ++j)
                x[j] = center[j] + spec.noise * g.normal();
            e.payload = std::move(x);
            e.label = c;
            e.audit_label = c;
            out.examples.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<int> isic2018_class_counts() {
    return {1103, 6716, 529, 325, 1087, 120, 135};
}

SyntheticSpec blobs4_spec() {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.class_counts = {600, 150, 150, 100};
    spec.dim = 16;
    spec.separation = 0.55;
    spec.noise = 1.0;
    return spec;
}

std::uint64_t blobs4_dataset_seed() { return 71; }

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kMetaPrefix = "# sskd-dataset v1";

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                              c == '_' || c == '.'
                          ? c
                          : '_');
    return out;
}

void write_pgm16(const fs::path& path, const RasterGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path.string());
    out << "P5\n" << grid.width << " " << grid.height << "\n65535\n";
    for (double v : grid.values) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
        // PGM stores 16-bit samples most-significant byte first.
        const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                        static_cast<unsigned char>(q & 0xff)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!out) throw ParseError("short write: " + path.string());
}

RasterGrid read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image: " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5") throw ParseError(path.string() + ": not a binary PGM (P5) file");
    std::size_t width = 0, height = 0;
    long maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width == 0 || height == 0 || (maxval != 255 && maxval != 65535))
        throw ParseError(path.string() + ": unsupported PGM header");
    in.get();  // single whitespace after maxval
    RasterGrid grid;
    grid.width = width;
    grid.height = height;
    grid.values.resize(width * height);
    const std::size_t bytes_per = maxval == 255 ? 1 : 2;
    std::vector<unsigned char> raw(width * height * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw ParseError(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const unsigned long q = bytes_per == 1
                                    ? raw[i]
                                    : (static_cast<unsigned long>(raw[2 * i]) << 8) |
                                          raw[2 * i + 1];
        grid.values[i] = static_cast<double>(q) / static_cast<double>(maxval);
    }
    return grid;
}

int parse_label_field(const std::string& field, int num_classes,
                      const std::string& path, std::size_t line_no) {
    std::size_t pos = 0;
    int label = 0;
    try {
        label = std::stoi(field, &pos);
    } catch (const std::exception&) {
        parse_fail(path, line_no, "label is not an integer: '" + field + "'");
    }
    if (pos != field.size())
        parse_fail(path, line_no, "label is not an integer: '" + field + "'");
    if (label < 0 || label >= num_classes)
        throw ValidationError(path + ":" + std::to_string(line_no) + ": label " +
                              std::to_string(label) + " outside declared classes=" +
                              std::to_string(num_classes));
    return label;
}

double parse_double_field(const std::string& field, const std::string& path,
                          std::size_t line_no) {
    const char* begin = field.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || static_cast<std::size_t>(end - begin) != field.size())
        parse_fail(path, line_no, "malformed number: '" + field + "'");
    return v;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& path) {
    if (dataset.examples.empty()) throw InvalidInputError("save_dataset: empty dataset");
    const bool raster = is_raster(dataset.examples.front().payload);
    for (const Example& e : dataset.examples) {
        if (!e.label) throw InvalidInputError("save_dataset: unlabeled example " + e.id);
        if (is_raster(e.payload) != raster)
            throw InvalidInputError("save_dataset: mixed payload kinds");
    }

    const fs::path file(path);
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file);
    if (!out) throw ParseError("cannot open for writing: " + path);

    if (!raster) {
        const auto dim = std::get<std::vector<double>>(dataset.examples.front().payload).size();
        out << kMetaPrefix << " kind=vector classes=" << dataset.num_classes
            << " dim=" << dim << "\n";
        out << "id,label";
        for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
        out << "\n";
        for (const Example& e : dataset.examples) {
            const auto& x = std::get<std::vector<double>>(e.payload);
            if (x.size() != dim)
                throw InvalidInputError("save_dataset: inconsistent dimension for " + e.id);
            out << e.id << "," << *e.label;
            for (double v : x) out << "," << format_double(v);
            out << "\n";
        }
    } else {
        out << kMetaPrefix << " kind=raster classes=" << dataset.num_classes << "\n";
        out << "id,label,path\n";
        const fs::path dir = file.has_parent_path() ? file.parent_path() : fs::path(".");
        for (const Example& e : dataset.examples) {
            const std::string image_name = sanitize_id(e.id) + ".pgm";
            write_pgm16(dir / image_name, std::get<RasterGrid>(e.payload));
            out << e.id << "," << *e.label << "," << image_name << "\n";
        }
    }
    if (!out) throw ParseError("short write: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open: " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
    ++line_no;
    if (line.rfind(kMetaPrefix, 0) != 0)
        parse_fail(path, line_no, "missing metadata line '" + std::string(kMetaPrefix) + " ...'");

    std::string kind;
    int num_classes = -1;
    long declared_dim = -1;
    {
        std::istringstream meta(line.substr(std::string(kMetaPrefix).size()));
        std::string token;
        while (meta >> token) {
            const auto eq = token.find('=');
            if (eq == std::string::npos) parse_fail(path, line_no, "bad metadata token: " + token);
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "kind") kind = value;
            else if (key == "classes") num_classes = std::stoi(value);
            else if (key == "dim") declared_dim = std::stol(value);
        }
    }
    if (kind != "vector" && kind != "raster")
        parse_fail(path, line_no, "metadata must declare kind=vector or kind=raster");
    if (num_classes < 2) parse_fail(path, line_no, "metadata must declare classes>=2");

    if (!std::getline(in, line)) parse_fail(path, line_no + 1, "missing header row");
    ++line_no;

    Dataset dataset;
    dataset.num_classes = num_classes;
    std::unordered_set<std::string> seen_ids;
    const fs::path dir = fs::path(path).has_parent_path() ? fs::path(path).parent_path()
                                                          : fs::path(".");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 3) parse_fail(path, line_no, "too few fields");
        Example e;
        e.id = fields[0];
        if (e.id.empty()) parse_fail(path, line_no, "empty id");
        if (!seen_ids.insert(e.id).second)
            throw ValidationError(path + ":" + std::to_string(line_no) +
                                  ": duplicate id " + e.id);
        const int label = parse_label_field(fields[1], num_classes, path, line_no);
        e.label = label;
        e.audit_label = label;
        if (kind == "vector") {
            std::vector<double> x;
            x.reserve(fields.size() - 2);
            for (std::size_t j = 2; j < fields.size(); ++j)
                x.push_back(parse_double_field(fields[j], path, line_no));
            if (declared_dim >= 0 && static_cast<long>(x.size()) != declared_dim)
                parse_fail(path, line_no, "row dimension disagrees with metadata dim");
            if (!all_finite(std::span<const double>(x)))
                throw ValidationError(path + ":" + std::to_string(line_no) +
                                      ": non-finite feature value");
            e.payload = std::move(x);
        } else {
            if (fields.size() != 3) parse_fail(path, line_no, "raster rows are id,label,path");
            e.payload = read_pgm(dir / fields[2]);
        }
        dataset.examples.push_back(std::move(e));
    }
    if (dataset.examples.empty()) parse_fail(path, line_no, "dataset has no rows");
    return dataset;
}

}  // namespace sskd
