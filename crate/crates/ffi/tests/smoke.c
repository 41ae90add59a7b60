#include <math.h>
#include <stdio.h>
#include <string.h>

#include "cgo.h"

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            char msg[256];                                              \
            cgo_last_error_message(msg, sizeof msg);                    \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, msg); \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);
    CHECK(strlen(cgo_version()) > 0);

    CgoPhase *phase = NULL;
    CHECK(cgo_phase_new(0.5, 1.0, 0.3, &phase) == CGO_STATUS_OK);
    double a0 = 0.0;
    CHECK(cgo_phase_amplitude(phase, CGO_BRANCH_DIRECT, 0.0, 1.0, &a0) == CGO_STATUS_OK);
    CHECK(fabs(a0 - 1.0 / sqrt(1.5)) < 1e-8);
    cgo_phase_free(phase);

    CgoConfig *cfg = NULL;
    CHECK(cgo_config_from_toml("[phase]\nkappa = 7.0\n", NULL, &cfg) == CGO_STATUS_CONFIG);
    char msg[256];
    CHECK(cgo_last_error_message(msg, sizeof msg) > 0 && strstr(msg, "phase.kappa") != NULL);

    CHECK(cgo_config_from_toml("[eikonal]\nnodes = 8\n", NULL, &cfg) == CGO_STATUS_OK);
    CgoReport *report = NULL;
    CHECK(cgo_run(cfg, "eikonal", argv[1], &report) == CGO_STATUS_OK);
    CHECK(cgo_report_rows(report) > 0);
    CHECK(cgo_report_all_pass(report));
    cgo_report_free(report);
    cgo_config_free(cfg);

    puts("ok");
    return 0;
}
