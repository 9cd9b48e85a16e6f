#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <thread>

#include "fedgest/error.hpp"
#include "fedgest/tcp.hpp"

namespace fedgest::tcp {

namespace {

[[noreturn]] void sys_error(const std::string& what) {
  throw Error(Errc::network, what + ": " + std::strerror(errno));
}

std::uint16_t parse_port(const std::string& text) {
  std::size_t used = 0;
  long v = -1;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v < 0 || v > 65535) {
    throw Error(Errc::domain, "invalid port '" + text + "'");
  }
  return static_cast<std::uint16_t>(v);
}

struct AddrInfo {
  addrinfo* head = nullptr;
  ~AddrInfo() {
    if (head) freeaddrinfo(head);
  }
};

AddrInfo resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  AddrInfo ai;
  const std::string port = std::to_string(ep.port);
  const int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(),
                             &hints, &ai.head);
  if (rc != 0) {
    throw Error(Errc::network, "cannot resolve '" + ep.str() + "': " + gai_strerror(rc));
  }
  return ai;
}

}  // namespace

Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    ep.port = parse_port(text);
  } else {
    if (colon > 0) ep.host = text.substr(0, colon);
    ep.port = parse_port(text.substr(colon + 1));
  }
  return ep;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::send_all(const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd_, data, n, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      sys_error("send failed");
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
}

void Socket::recv_all(std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd_, data, n, 0);
    if (k == 0) throw Error(Errc::network, "peer closed the connection");
    if (k < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw Error(Errc::network, "timed out waiting for the peer");
      }
      sys_error("recv failed");
    }
    data += k;
    n -= static_cast<std::size_t>(k);
  }
}

void Socket::send_frame(const wire::Frame& f) {
  if (!valid()) throw Error(Errc::network, "socket is closed");
  const auto bytes = wire::encode_frame(f);
  send_all(bytes.data(), bytes.size());
}

wire::Frame Socket::recv_frame() {
  if (!valid()) throw Error(Errc::network, "socket is closed");
  std::vector<std::uint8_t> buf(wire::kHeaderSize);
  recv_all(buf.data(), buf.size());
  const auto h = wire::decode_header(std::span<const std::uint8_t, wire::kHeaderSize>(
      buf.data(), wire::kHeaderSize));
  buf.resize(wire::kHeaderSize + h.length + wire::kTrailerSize);
  recv_all(buf.data() + wire::kHeaderSize, h.length + wire::kTrailerSize);
  return wire::decode_frame(buf);
}

Socket Socket::connect(const Endpoint& ep, std::chrono::milliseconds retry_for) {
  const auto deadline = std::chrono::steady_clock::now() + retry_for;
  for (;;) {
    AddrInfo ai = resolve(ep, false);
    for (addrinfo* p = ai.head; p; p = p->ai_next) {
      Socket s(::socket(p->ai_family, p->ai_socktype, p->ai_protocol));
      if (!s.valid()) continue;
      if (::connect(s.fd(), p->ai_addr, p->ai_addrlen) == 0) {
        const int one = 1;
        setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        return s;
      }
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw Error(Errc::network, "cannot connect to " + ep.str());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

Listener::Listener(const Endpoint& ep) {
  AddrInfo ai = resolve(ep, true);
  for (addrinfo* p = ai.head; p; p = p->ai_next) {
    const int fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, p->ai_addr, p->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  if (fd_ < 0) sys_error("cannot listen on " + ep.str());
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    sys_error("getsockname failed");
  }
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int ms = timeout.count() > 0 ? static_cast<int>(timeout.count()) : -1;
  for (;;) {
    const int rc = ::poll(&pfd, 1, ms);
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) sys_error("poll failed");
    if (rc == 0) throw Error(Errc::network, "timed out waiting for clients");
    break;
  }
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) sys_error("accept failed");
  const int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

}  // namespace fedgest::tcp
