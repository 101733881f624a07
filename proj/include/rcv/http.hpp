#pragma once

// Single include point for cpp-httplib so the TLS switch is set consistently.
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <httplib.h>
