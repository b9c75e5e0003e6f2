#pragma once
#include "mflab/errors.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

namespace mflab {

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Minimal deterministic CSV emitter: %.17g numbers, no quoting, no locale.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::initializer_list<std::string_view> header)
        : os_(path, std::ios::trunc) {
        if (!os_) throw IoError("cannot open CSV for writing: " + path);
        bool first = true;
        for (auto h : header) {
            if (!first) os_ << ',';
            os_ << h;
            first = false;
        }
        os_ << '\n';
    }

    CsvWriter& cell(double v) {
        sep();
        os_ << csv_num(v);
        return *this;
    }
    CsvWriter& cell(long v) {
        sep();
        os_ << v;
        return *this;
    }
    CsvWriter& cell(std::string_view v) {
        sep();
        os_ << v;
        return *this;
    }
    void endrow() {
        os_ << '\n';
        at_row_start_ = true;
    }

    void flush() { os_.flush(); }

private:
    void sep() {
        if (!at_row_start_) os_ << ',';
        at_row_start_ = false;
    }
    std::ofstream os_;
    bool at_row_start_ = true;
};

} // namespace mflab
