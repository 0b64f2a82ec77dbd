#pragma once

#include <stdexcept>
#include <string>

namespace mot {

// Error families map one-to-one onto CLI exit codes.
enum class error_family { usage = 2, data = 3, backend = 4, internal = 5 };

class error : public std::runtime_error {
public:
    error(error_family family, const std::string& what)
        : std::runtime_error(what), family_(family) {}

    error_family family() const noexcept { return family_; }
    int exit_code() const noexcept { return static_cast<int>(family_); }

private:
    error_family family_;
};

class usage_error : public error {
public:
    explicit usage_error(const std::string& what) : error(error_family::usage, what) {}
};

class data_error : public error {
public:
    explicit data_error(const std::string& what) : error(error_family::data, what) {}
};

class backend_error : public error {
public:
    explicit backend_error(const std::string& what) : error(error_family::backend, what) {}
};

// Invalid numeric arguments (pass@k ranges, budgets that do not divide evenly).
class domain_error : public data_error {
public:
    explicit domain_error(const std::string& what) : data_error("domain error: " + what) {}
};

}  // namespace mot
