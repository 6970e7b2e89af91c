#pragma once

#include <string>
#include <vector>
#include <fstream>
#include <stdexcept>

namespace pnlw {

// RFC 4180 minimal writer; doubles printed with %.17g so re-runs are
// byte-identical.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    }

    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(cells[i]);
        }
        out_ << "\r\n";
    }

    static std::string num(double x) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        return buf;
    }

    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            q += c;
            if (c == '"') q += '"';
        }
        q += '"';
        return q;
    }

private:
    std::ofstream out_;
};

} // namespace pnlw
