#include "tempsteer/probes.hpp"

#include "tempsteer/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace tempsteer {

double Probe::score(std::span<const float> v) const {
    if (v.size() != w.size()) {
        fail(ErrorKind::Input, "probe expects dim " + std::to_string(w.size()) + ", got " + std::to_string(v.size()));
    }
    double s = b;
    for (std::size_t k = 0; k < v.size(); ++k) {
        s += static_cast<double>(w[k]) * v[k];
    }
    return s;
}

namespace {

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

Split group_split(std::span<const int> labels, std::span<const std::size_t> groups, double ratio, std::uint64_t seed) {
    // group id -> member rows, in first-appearance order
    std::map<std::size_t, std::vector<std::size_t>> members;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, fresh] = members.try_emplace(groups[i]);
        if (fresh) {
            order.push_back(groups[i]);
        }
        it->second.push_back(i);
    }
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t g : order) {
        int key = 0;
        for (std::size_t i : members[g]) {
            key |= labels[i] ? 2 : 1;
        }
        strata[key].push_back(g);
    }

    Split s;
    for (auto & [key, gs] : strata) {
        Rng rng(derive_seed(seed, "probe-split/" + std::to_string(key)));
        rng.shuffle(gs);
        std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(gs.size())));
        if (gs.size() >= 2) {
            n_train = std::clamp<std::size_t>(n_train, 1, gs.size() - 1);
        } else {
            n_train = gs.size();
        }
        for (std::size_t j = 0; j < gs.size(); ++j) {
            auto & dst = j < n_train ? s.train : s.val;
            dst.insert(dst.end(), members[gs[j]].begin(), members[gs[j]].end());
        }
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    return s;
}

} // namespace

ProbeFit train_probe(const Matrix & x, std::span<const int> labels, const ProbeOptions & opts,
                     std::span<const std::size_t> groups) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    if (labels.size() != n || (!groups.empty() && groups.size() != n)) {
        fail(ErrorKind::Input, "probe inputs disagree in length");
    }
    if (!(opts.split_ratio > 0.0 && opts.split_ratio < 1.0)) {
        fail(ErrorKind::Config, "split ratio must lie in (0, 1)");
    }
    std::size_t pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) {
            fail(ErrorKind::Input, "probe labels must be 0 or 1");
        }
        pos += static_cast<std::size_t>(y);
    }
    if (pos < 2 || n - pos < 2) {
        fail(ErrorKind::Degenerate, "probe needs at least two examples of each class (got " + std::to_string(n - pos) +
                                        " / " + std::to_string(pos) + ")");
    }

    std::vector<std::size_t> own;
    if (groups.empty()) {
        own.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            own[i] = i;
        }
        groups = own;
    }
    const Split split = group_split(labels, groups, opts.split_ratio, opts.seed);
    std::size_t train_pos = 0;
    for (std::size_t i : split.train) {
        train_pos += static_cast<std::size_t>(labels[i]);
    }
    if (split.val.empty() || train_pos == 0 || train_pos == split.train.size()) {
        fail(ErrorKind::Degenerate, "split leaves a class missing from the training or validation set");
    }

    // standardize on training statistics
    const std::size_t nt = split.train.size();
    std::vector<double> mu(d, 0.0), sd(d, 0.0);
    for (std::size_t i : split.train) {
        const auto r = x.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            mu[k] += r[k];
        }
    }
    for (auto & m : mu) {
        m /= static_cast<double>(nt);
    }
    for (std::size_t i : split.train) {
        const auto r = x.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            const double c = r[k] - mu[k];
            sd[k] += c * c;
        }
    }
    for (auto & s : sd) {
        s = std::sqrt(s / static_cast<double>(nt));
        if (s < 1e-12) {
            s = 1.0;
        }
    }
    std::vector<double> z(nt * d);
    std::vector<double> y(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto r = x.row(split.train[t]);
        for (std::size_t k = 0; k < d; ++k) {
            z[t * d + k] = (r[k] - mu[k]) / sd[k];
        }
        y[t] = labels[split.train[t]];
    }

    std::vector<double> w(d, 0.0), gw(d);
    double b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(nt);
    for (int it = 0; it < opts.iterations; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            const double * zr = &z[t * d];
            double s = b;
            for (std::size_t k = 0; k < d; ++k) {
                s += w[k] * zr[k];
            }
            const double err = 1.0 / (1.0 + std::exp(-s)) - y[t];
            for (std::size_t k = 0; k < d; ++k) {
                gw[k] += err * zr[k];
            }
            gb += err;
        }
        for (std::size_t k = 0; k < d; ++k) {
            w[k] -= opts.lr * (gw[k] * inv_n + opts.l2 * w[k]);
        }
        b -= opts.lr * gb * inv_n;
    }

    ProbeFit fit;
    fit.probe.w.resize(d);
    double braw = b;
    for (std::size_t k = 0; k < d; ++k) {
        fit.probe.w[k] = static_cast<float>(w[k] / sd[k]);
        braw -= w[k] * mu[k] / sd[k];
    }
    fit.probe.b = static_cast<float>(braw);

    std::size_t correct = 0;
    for (std::size_t i : split.val) {
        correct += fit.probe.predict(x.row(i)) == (labels[i] == 1) ? 1 : 0;
    }
    fit.train_n      = nt;
    fit.val_n        = split.val.size();
    fit.val_accuracy = static_cast<double>(correct) / static_cast<double>(fit.val_n);
    return fit;
}

double ProbeReport::accuracy_of(const ModuleId & id) const {
    for (const auto & r : rows) {
        if (r.module == id) {
            return r.accuracy;
        }
    }
    fail(ErrorKind::Bounds, "module " + id.str() + " not in probe report");
}

ProbeReport probe_all(const PairedActivations & acts, ModuleKind kind, const ProbeOptions & opts) {
    acts.validate();
    const auto modules = acts.layout.modules(kind);
    const std::size_t n = acts.size();

    std::vector<int>         labels(2 * n);
    std::vector<std::size_t> groups(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i]     = 0;
        labels[n + i] = 1;
        groups[i]     = i;
        groups[n + i] = i;
    }

    ProbeReport report;
    report.kind        = kind;
    report.split_seed  = opts.seed;
    report.split_ratio = opts.split_ratio;
    report.rows.resize(modules.size());
    parallel_for(modules.size(), [&](std::size_t m) {
        const ModuleId id  = modules[m];
        const Matrix & vn  = acts.normal_of(id);
        const Matrix & vh  = acts.halluc_of(id);
        Matrix x(2 * n, vn.cols);
        std::copy(vn.data.begin(), vn.data.end(), x.data.begin());
        std::copy(vh.data.begin(), vh.data.end(), x.data.begin() + static_cast<std::ptrdiff_t>(vn.data.size()));
        try {
            const ProbeFit fit = train_probe(x, labels, opts, groups);
            report.rows[m]     = {id, fit.train_n, fit.val_n, fit.val_accuracy};
        } catch (const Error & e) {
            throw Error(e.kind(), "probe for " + id.str() + ": " + e.what());
        }
    });
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ProbeRow & a, const ProbeRow & b) { return a.module < b.module; });
    return report;
}

std::vector<SelectedModule> top_k(const ProbeReport & report, std::size_t k) {
    if (k > report.rows.size()) {
        fail(ErrorKind::Bounds, "K=" + std::to_string(k) + " exceeds module count " + std::to_string(report.rows.size()));
    }
    std::vector<ProbeRow> rows = report.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const ProbeRow & a, const ProbeRow & b) {
        if (a.accuracy != b.accuracy) {
            return a.accuracy > b.accuracy;
        }
        return a.module < b.module;
    });
    std::vector<SelectedModule> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({rows[i].module, rows[i].accuracy});
    }
    return out;
}

std::vector<ModuleId> select_top_k(const ProbeReport & report, std::size_t k) {
    std::vector<ModuleId> ids;
    for (const auto & s : top_k(report, k)) {
        ids.push_back(s.module);
    }
    return ids;
}

std::vector<LayerSummary> layerwise_summary(const ProbeReport & report) {
    std::vector<LayerSummary> out;
    for (const auto & r : report.rows) {
        if (out.empty() || out.back().layer != r.module.layer) {
            out.push_back({r.module.layer, 0.0, r.accuracy, r.accuracy, {}});
        }
        auto & s = out.back();
        s.accuracies.push_back(r.accuracy);
        s.min = std::min(s.min, r.accuracy);
        s.max = std::max(s.max, r.accuracy);
    }
    for (auto & s : out) {
        double sum = 0.0;
        for (double a : s.accuracies) {
            sum += a;
        }
        s.mean = sum / static_cast<double>(s.accuracies.size());
    }
    return out;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string report_to_csv(const ProbeReport & report) {
    std::string out = "kind,layer,head,train_n,val_n,accuracy\n";
    for (const auto & r : report.rows) {
        out += std::string(to_string(r.module.kind)) + "," + std::to_string(r.module.layer) + "," +
               std::to_string(r.module.head) + "," + std::to_string(r.train_n) + "," + std::to_string(r.val_n) + "," +
               fmt_double(r.accuracy) + "\n";
    }
    return out;
}

ProbeReport report_from_csv(const std::string & text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "kind,layer,head,train_n,val_n,accuracy") {
        fail(ErrorKind::Corrupt, "probe report: unexpected CSV header");
    }
    ProbeReport report;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            f.push_back(cell);
        }
        if (f.size() != 6) {
            fail(ErrorKind::Corrupt, "probe report line " + std::to_string(lineno) + ": expected 6 fields");
        }
        try {
            ProbeRow r;
            r.module   = {module_kind_from_string(f[0]), std::stoi(f[1]), std::stoi(f[2])};
            r.train_n  = std::stoul(f[3]);
            r.val_n    = std::stoul(f[4]);
            r.accuracy = std::stod(f[5]);
            if (!report.rows.empty() && r.module.kind != report.rows.front().module.kind) {
                fail(ErrorKind::Corrupt, "probe report mixes module kinds");
            }
            report.rows.push_back(r);
        } catch (const std::logic_error &) {
            fail(ErrorKind::Corrupt, "probe report line " + std::to_string(lineno) + ": bad number");
        }
    }
    if (!report.rows.empty()) {
        report.kind = report.rows.front().module.kind;
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const ProbeRow & a, const ProbeRow & b) { return a.module < b.module; });
    return report;
}

void save_report_csv(const ProbeReport & report, const std::filesystem::path & path) {
    io::write_text(path, report_to_csv(report));
}

ProbeReport load_report_csv(const std::filesystem::path & path) {
    return report_from_csv(io::read_text(path));
}

std::string summary_to_csv(std::span<const LayerSummary> summary) {
    std::string out = "layer,mean,min,max,accuracies\n";
    for (const auto & s : summary) {
        std::string accs;
        for (std::size_t i = 0; i < s.accuracies.size(); ++i) {
            accs += (i ? ";" : "") + fmt_double(s.accuracies[i]);
        }
        out += std::to_string(s.layer) + "," + fmt_double(s.mean) + "," + fmt_double(s.min) + "," + fmt_double(s.max) +
               "," + accs + "\n";
    }
    return out;
}

} // namespace tempsteer
