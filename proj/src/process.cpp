#include "codegraph/process.hpp"

#include "codegraph/error.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace codegraph {

namespace {

void set_cloexec(int fd) { ::fcntl(fd, F_SETFD, FD_CLOEXEC); }

struct Pipe {
    int fds[2] = {-1, -1};

    Pipe() {
        if (::pipe(fds) != 0) fail(ErrorKind::Process, "pipe failed: " + std::string(std::strerror(errno)));
        set_cloexec(fds[0]);
        set_cloexec(fds[1]);
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    int read_fd() const { return fds[0]; }
    int write_fd() const { return fds[1]; }
    void close_read() {
        if (fds[0] >= 0) ::close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) ::close(fds[1]);
        fds[1] = -1;
    }
};

// The writer side must not die on a child that never reads its stdin.
void ignore_sigpipe_once() {
    static const bool done = [] {
        struct sigaction sa{};
        sa.sa_handler = SIG_IGN;
        ::sigaction(SIGPIPE, &sa, nullptr);
        return true;
    }();
    (void)done;
}

} // namespace

ProcessResult run_shell(const std::string& command, const std::string& cwd,
                        const std::string& stdin_data, int timeout_seconds) {
    ignore_sigpipe_once();

    Pipe in;
    Pipe out;
    Pipe err;

    const pid_t pid = ::fork();
    if (pid < 0) fail(ErrorKind::Process, "fork failed: " + std::string(std::strerror(errno)));

    if (pid == 0) {
        ::dup2(in.read_fd(), STDIN_FILENO);
        ::dup2(out.write_fd(), STDOUT_FILENO);
        ::dup2(err.write_fd(), STDERR_FILENO);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
            const char* msg = "cannot change to working directory\n";
            [[maybe_unused]] ssize_t n = ::write(STDERR_FILENO, msg, std::strlen(msg));
            ::_exit(127);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }

    in.close_read();
    out.close_write();
    err.close_write();

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
    std::size_t written = 0;
    bool stdin_open = true;
    if (stdin_data.empty()) {
        in.close_write();
        stdin_open = false;
    }

    auto poll_timeout_ms = [&]() -> int {
        if (timeout_seconds <= 0) return -1;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        return left.count() < 0 ? 0 : static_cast<int>(left.count());
    };

    bool out_open = true;
    bool err_open = true;
    char buffer[4096];
    while (out_open || err_open || stdin_open) {
        struct pollfd fds[3];
        int count = 0;
        int out_slot = -1;
        int err_slot = -1;
        int in_slot = -1;
        if (out_open) {
            out_slot = count;
            fds[count++] = {out.read_fd(), POLLIN, 0};
        }
        if (err_open) {
            err_slot = count;
            fds[count++] = {err.read_fd(), POLLIN, 0};
        }
        if (stdin_open) {
            in_slot = count;
            fds[count++] = {in.write_fd(), POLLOUT, 0};
        }

        const int ready = ::poll(fds, static_cast<nfds_t>(count), poll_timeout_ms());
        if (ready < 0) {
            if (errno == EINTR) continue;
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            fail(ErrorKind::Process, "poll failed: " + std::string(std::strerror(errno)));
        }
        if (ready == 0) { // deadline
            result.timed_out = true;
            ::kill(pid, SIGKILL);
            break;
        }

        auto drain = [&](int slot, Pipe& pipe, std::string& sink, bool& open_flag) {
            if (slot < 0 || fds[slot].revents == 0) return;
            const ssize_t n = ::read(pipe.read_fd(), buffer, sizeof buffer);
            if (n > 0) {
                sink.append(buffer, static_cast<std::size_t>(n));
            } else {
                pipe.close_read();
                open_flag = false;
            }
        };
        drain(out_slot, out, result.output, out_open);
        drain(err_slot, err, result.error_output, err_open);

        if (in_slot >= 0 && fds[in_slot].revents != 0) {
            const ssize_t n = ::write(in.write_fd(), stdin_data.data() + written,
                                      stdin_data.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if (n < 0 || written == stdin_data.size()) {
                in.close_write();
                stdin_open = false;
            }
        }
    }

    int status = 0;
    ::waitpid(pid, &status, 0);
    if (result.timed_out) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

} // namespace codegraph
