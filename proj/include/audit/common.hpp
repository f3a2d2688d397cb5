#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace audit {

// Exit-code mapping lives in the CLI: ValidationError -> 2,
// BackendError -> 3, PrerequisiteError -> 4.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transient transport failure; the gateway retries these.
struct TransientBackendError : BackendError {
    using BackendError::BackendError;
};

// Transport payload arrived but could not be interpreted.
struct ProtocolError : BackendError {
    using BackendError::BackendError;
};

struct PrerequisiteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

uint64_t fnv1a64(std::string_view data, uint64_t seed = 14695981039346656037ull);

// 128-bit hex content key (two independent FNV passes).
std::string content_key(std::string_view data);

uint64_t mix64(uint64_t a, uint64_t b);

// Counter-based PRNG used wherever byte-identical output across platforms
// matters (std:: distributions are implementation-defined).
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next();
    // Uniform in [0, n). n must be > 0.
    uint64_t below(uint64_t n);
    // Uniform in [0, 1).
    double unit();
    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

// Fixed-precision, locale-independent formatting for CSV output.
std::string format_fixed(double v, int precision);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
// Write-temp-then-rename.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

// Minimal CSV: quotes fields containing separators/quotes/newlines.
std::string csv_escape(std::string_view field);
std::vector<std::string> csv_split_line(const std::string& line);

}  // namespace audit
