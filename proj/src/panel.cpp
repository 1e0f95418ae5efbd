#include "gravbench/panel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gravbench {

namespace {

std::string trim(const std::string& value) {
    const auto first = value.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = value.find_last_not_of(" \t\r\n");
    return value.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string token;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(token);
            token.clear();
        } else {
            token.push_back(ch);
        }
    }
    fields.push_back(token);
    return fields;
}

bool parse_double(const std::string& text, double* out) {
    const std::string t = trim(text);
    if (t.empty() || t == "NA" || t == "na" || t == "." || t == "nan" || t == "NaN") return false;
    char* end = nullptr;
    const double value = std::strtod(t.c_str(), &end);
    if (end == nullptr || *end != '\0') return false;
    *out = value;
    return true;
}

bool parse_int(const std::string& text, int* out) {
    double value;
    if (!parse_double(text, &value)) return false;
    if (value != std::floor(value)) return false;
    *out = static_cast<int>(value);
    return true;
}

std::uint64_t triple_key(std::int32_t pid, int year) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(pid)) << 16) ^
           static_cast<std::uint32_t>(year + 32768);
}

}  // namespace

TradePanel TradePanel::from_observations(std::vector<Observation> rows) {
    TradePanel panel;
    std::unordered_map<std::string, std::int32_t> country_ids;
    // Canonical ids: countries sorted, then pairs sorted by (exporter, importer).
    for (const auto& row : rows) {
        country_ids.emplace(row.exporter, 0);
        country_ids.emplace(row.importer, 0);
    }
    panel.countries_.reserve(country_ids.size());
    for (const auto& [name, _] : country_ids) panel.countries_.push_back(name);
    std::sort(panel.countries_.begin(), panel.countries_.end());
    for (std::size_t i = 0; i < panel.countries_.size(); ++i)
        country_ids[panel.countries_[i]] = static_cast<std::int32_t>(i);

    std::map<std::pair<std::int32_t, std::int32_t>, std::int32_t> pair_ids;
    for (const auto& row : rows)
        pair_ids.emplace(std::make_pair(country_ids[row.exporter], country_ids[row.importer]), 0);
    panel.pair_defs_.reserve(pair_ids.size());
    for (auto& [key, id] : pair_ids) {
        id = static_cast<std::int32_t>(panel.pair_defs_.size());
        panel.pair_defs_.push_back(key);
    }

    const std::size_t n = rows.size();
    panel.exporter_.reserve(n);
    panel.importer_.reserve(n);
    panel.pair_.reserve(n);
    panel.year_.reserve(n);
    panel.trade_.reserve(n);
    for (auto& col : panel.covariates_) col.reserve(n);
    for (const auto& row : rows) {
        const std::int32_t eid = country_ids[row.exporter];
        const std::int32_t iid = country_ids[row.importer];
        panel.exporter_.push_back(eid);
        panel.importer_.push_back(iid);
        panel.pair_.push_back(pair_ids[{eid, iid}]);
        panel.year_.push_back(row.year);
        panel.trade_.push_back(row.trade);
        for (int c = 0; c < kNumCovariates; ++c) panel.covariates_[c].push_back(row.covariates[c]);
    }
    panel.rebuild_indexes();
    return panel;
}

void TradePanel::rebuild_indexes() {
    pair_obs_.assign(pair_defs_.size(), {});
    year_min_ = 0;
    year_max_ = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        pair_obs_[pair_[i]].push_back(static_cast<std::int32_t>(i));
        if (i == 0) {
            year_min_ = year_max_ = year_[i];
        } else {
            year_min_ = std::min(year_min_, year_[i]);
            year_max_ = std::max(year_max_, year_[i]);
        }
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(size() * 2);
    for (auto& positions : pair_obs_) {
        std::sort(positions.begin(), positions.end(),
                  [this](std::int32_t a, std::int32_t b) { return year_[a] < year_[b]; });
        for (std::int32_t pos : positions) {
            if (!seen.insert(triple_key(pair_[pos], year_[pos])).second) {
                throw Error("duplicate (exporter, importer, year) triple: " +
                            pair_label(pair_[pos]) + " " + std::to_string(year_[pos]));
            }
        }
    }
}

std::size_t TradePanel::num_present_pairs() const {
    std::size_t count = 0;
    for (const auto& positions : pair_obs_)
        if (!positions.empty()) ++count;
    return count;
}

std::string TradePanel::pair_label(std::int32_t pid) const {
    const auto& [e, i] = pair_defs_[pid];
    return countries_[e] + "->" + countries_[i];
}

Observation TradePanel::at(std::size_t i) const {
    Observation row;
    row.exporter = countries_[exporter_[i]];
    row.importer = countries_[importer_[i]];
    row.year = year_[i];
    row.trade = trade_[i];
    for (int c = 0; c < kNumCovariates; ++c) row.covariates[c] = covariates_[c][i];
    return row;
}

TradePanel TradePanel::subset(std::span<const std::int32_t> rows) const {
    TradePanel out;
    out.countries_ = countries_;
    out.pair_defs_ = pair_defs_;
    const std::size_t n = rows.size();
    out.exporter_.reserve(n);
    out.importer_.reserve(n);
    out.pair_.reserve(n);
    out.year_.reserve(n);
    out.trade_.reserve(n);
    for (auto& col : out.covariates_) col.reserve(n);
    for (std::int32_t pos : rows) {
        out.exporter_.push_back(exporter_[pos]);
        out.importer_.push_back(importer_[pos]);
        out.pair_.push_back(pair_[pos]);
        out.year_.push_back(year_[pos]);
        out.trade_.push_back(trade_[pos]);
        for (int c = 0; c < kNumCovariates; ++c)
            out.covariates_[c].push_back(covariates_[c][pos]);
    }
    out.rebuild_indexes();
    return out;
}

std::size_t TradePanel::zero_flow_count() const {
    return static_cast<std::size_t>(
        std::count(trade_.begin(), trade_.end(), 0.0));
}

std::string TradePanel::summary() const {
    std::ostringstream out;
    out << "observations: " << size() << "\n"
        << "pairs: " << num_present_pairs() << "\n"
        << "countries: " << countries_.size() << "\n"
        << "years: " << year_min_ << "-" << year_max_ << "\n"
        << "zero flows: " << zero_flow_count() << "\n";
    return out.str();
}

void TradePanel::validate() const {
    for (std::size_t i = 0; i < size(); ++i) {
        if (exporter_[i] == importer_[i]) throw Error("self flow at row " + std::to_string(i));
        if (!(trade_[i] >= 0.0) || !std::isfinite(trade_[i]))
            throw Error("bad trade at row " + std::to_string(i));
        const auto& def = pair_defs_[pair_[i]];
        if (def.first != exporter_[i] || def.second != importer_[i])
            throw Error("pair index mismatch at row " + std::to_string(i));
    }
    for (std::size_t pid = 0; pid < pair_obs_.size(); ++pid) {
        const auto& positions = pair_obs_[pid];
        for (std::size_t j = 0; j + 1 < positions.size(); ++j) {
            if (year_[positions[j]] >= year_[positions[j + 1]])
                throw Error("pair years not strictly increasing: " +
                            pair_label(static_cast<std::int32_t>(pid)));
        }
    }
}

TradePanel load_panel(const std::string& path, const Schema& schema, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);

    std::string header_line;
    if (!std::getline(in, header_line)) throw Error("empty file: " + path);
    const auto headers = split_line(header_line, ',');
    std::unordered_map<std::string, int> column_of;
    for (std::size_t c = 0; c < headers.size(); ++c) column_of[trim(headers[c])] = static_cast<int>(c);

    auto require_column = [&](const std::string& name) {
        const auto it = column_of.find(name);
        if (it == column_of.end()) throw Error("missing column '" + name + "' in " + path);
        return it->second;
    };
    const int col_exporter = require_column(schema.exporter);
    const int col_importer = require_column(schema.importer);
    const int col_year = require_column(schema.year);
    const int col_trade = require_column(schema.trade);
    std::array<int, kNumCovariates> col_cov{};
    for (int c = 0; c < kNumCovariates; ++c) col_cov[c] = require_column(schema.covariates[c]);

    LoadReport local;
    std::vector<Observation> rows;
    std::string line;
    std::size_t line_no = 1;  // header was line 1
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++local.rows_read;
        const auto fields = split_line(line, ',');
        auto field = [&](int c) -> const std::string& {
            static const std::string empty;
            return c < static_cast<int>(fields.size()) ? fields[c] : empty;
        };

        Observation row;
        row.exporter = trim(field(col_exporter));
        row.importer = trim(field(col_importer));
        if (!parse_int(field(col_year), &row.year))
            throw Error("row " + std::to_string(line_no) + ": unparseable year");
        if (!parse_double(field(col_trade), &row.trade))
            throw Error("row " + std::to_string(line_no) + ": non-numeric trade");
        if (row.trade < 0.0 || !std::isfinite(row.trade))
            throw Error("row " + std::to_string(line_no) + ": negative or non-finite trade");

        if (row.exporter.empty() || row.importer.empty() || row.exporter == row.importer) {
            ++local.rejected_self_flow;
            continue;
        }
        bool missing = false, bad_indicator = false;
        for (int c = 0; c < kNumCovariates; ++c) {
            double value;
            if (!parse_double(field(col_cov[c]), &value) || !std::isfinite(value)) {
                missing = true;
                break;
            }
            if (c >= kFirstIndicator && value != 0.0 && value != 1.0) {
                bad_indicator = true;
                break;
            }
            row.covariates[c] = value;
        }
        if (missing) {
            ++local.rejected_missing_value;
            continue;
        }
        if (bad_indicator) {
            ++local.rejected_bad_indicator;
            continue;
        }
        if (schema.values_in_levels) {
            for (int c = 0; c < kFirstIndicator; ++c) {
                if (row.covariates[c] <= 0.0)
                    throw Error("row " + std::to_string(line_no) +
                                ": non-positive level for log transform");
                row.covariates[c] = std::log(row.covariates[c]);
            }
        }
        ++local.rows_kept;
        rows.push_back(std::move(row));
    }

    TradePanel panel = TradePanel::from_observations(std::move(rows));
    if (report) *report = local;
    return panel;
}

void write_panel_csv(const TradePanel& panel, const std::string& path, const Schema& schema) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << schema.exporter << ',' << schema.importer << ',' << schema.year << ','
        << schema.trade;
    for (int c = 0; c < kNumCovariates; ++c) out << ',' << schema.covariates[c];
    out << '\n';
    char buf[64];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < panel.size(); ++i) {
        out << panel.country(panel.exporter_id(i)) << ',' << panel.country(panel.importer_id(i))
            << ',' << panel.year(i) << ',';
        real(panel.trade(i));
        for (int c = 0; c < kNumCovariates; ++c) {
            out << ',';
            if (c >= kFirstIndicator) {
                out << static_cast<int>(panel.covariate(i, c));
            } else {
                real(panel.covariate(i, c));
            }
        }
        out << '\n';
    }
}

TradePanel balance_panel(const TradePanel& panel, int window_lo, int window_hi,
                         int required_count) {
    if (required_count < 1) throw Error("balance_panel: required_count must be >= 1");
    if (window_lo > window_hi) throw Error("balance_panel: invalid window");
    std::vector<std::int32_t> keep;
    for (std::int32_t pid = 0; pid < static_cast<std::int32_t>(panel.num_pairs()); ++pid) {
        const auto positions = panel.pair_positions(pid);
        std::vector<std::int32_t> in_window;
        for (std::int32_t pos : positions) {
            const int y = panel.year(pos);
            if (y >= window_lo && y <= window_hi) in_window.push_back(pos);
        }
        if (static_cast<int>(in_window.size()) == required_count)
            keep.insert(keep.end(), in_window.begin(), in_window.end());
    }
    if (keep.empty())
        throw Error("balance_panel: no pair has " + std::to_string(required_count) +
                    " observations in " + std::to_string(window_lo) + "-" +
                    std::to_string(window_hi));
    std::sort(keep.begin(), keep.end());
    return panel.subset(keep);
}

}  // namespace gravbench
